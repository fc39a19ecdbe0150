//! Dense and sparse kernels plus the direct solvers used by the Newton step.
//!
//! Dense products go through the `matrixmultiply` kernels; factorizations
//! are plain loops over `f64` slices.

mod dense;
mod factor;
mod matrix;
mod sparse;

pub use dense::DenseMatrix;
pub use factor::{
    cholesky, least_squares, lu_solve, row_rank, singular_values, solve_kkt, solve_kkt_regularized, solve_spd,
    Cholesky, DEFAULT_RANK_TOL,
};
pub use matrix::Matrix;
pub use sparse::SparseMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is singular and the right-hand side is outside its range")]
    Singular,
    #[error("saddle-point system is singular")]
    SingularKkt,
    #[error("matrix has no entries")]
    EmptyMatrix,
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(LinalgError::DimensionMismatch(format!(
            "{what}: expected length {want}, got {got}"
        )));
    }
    Ok(())
}
