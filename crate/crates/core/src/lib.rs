//! Optimization over Heaviside sets `{x : ||(Ax - b)_+||_0 <= s}`.
//!
//! The crate is layered bottom-up: [`linalg`] supplies the dense and sparse
//! kernels, [`heaviside`] the projection calculus, [`model`] the objectives
//! and problem container, [`stationarity`] the stationary equations and
//! point checks, and [`solver`] the Newton iterations. [`dataio`] and
//! [`metrics`] cover data loading, synthetic instances and evaluation.

pub mod dataio;
pub mod heaviside;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod stationarity;

pub use heaviside::{HeavisideBudget, IndexPartition};
pub use linalg::{DenseMatrix, Matrix, SparseMatrix};
pub use model::{Hessian, Objective, Problem};
pub use solver::{Curvature, SolveReport, Solver, SolverConfig, Termination};
pub use stationarity::Iterate;

/// `ceil(r * v)` for a ratio `r`, ignoring rounding noise just above an
/// integer (so `0.05 * 100` counts as exactly 5).
pub(crate) fn ceil_mul(r: f64, v: usize) -> usize {
    let p = r * v as f64;
    (p - 1e-9 * p.max(1.0)).ceil().max(0.0) as usize
}
