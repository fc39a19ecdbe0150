use crate::linalg::{self, solve_kkt_regularized, solve_spd, DenseMatrix, LinalgError, Matrix};
use crate::model::Hessian;

/// Retries with growing regularization before giving up on a step.
pub const MAX_DAMPING_RETRIES: usize = 6;

/// Relative size below which a diagonal Hessian entry counts as zero.
const THETA_FLOOR: f64 = 1e-14;

/// The linear system solved at one Newton step:
///
/// ```text
/// [ H    A_T^T ] [ u   ]     [ r1 ]
/// [ A_T  0     ] [ v_T ] = - [ r2 ]
/// ```
///
/// with `r1 = grad f + A_T^T lambda_T` and `r2 = A_T x - b_T`.
#[derive(Debug)]
pub struct NewtonSystem<'a> {
    pub a: &'a Matrix,
    pub hessian: &'a Hessian,
    pub working_set: &'a [usize],
    pub r1: &'a [f64],
    pub r2: &'a [f64],
}

/// A full step `d = (dx; dlambda)` and the regularization that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dlambda: Vec<f64>,
    pub damping: f64,
}

/// Solves a [`NewtonSystem`] with `delta I` added to `H` and `-delta I` to
/// the lower-right block. Returns `(u, v_T)`.
pub trait DirectionSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, sys: &NewtonSystem<'_>, delta: f64) -> Result<(Vec<f64>, Vec<f64>), LinalgError>;
}

/// Block elimination through `S = A_T Theta^{-1} A_T^T`. Needs a diagonal
/// Hessian with no zero entries; signs may be mixed.
#[derive(Debug, Clone, Copy, Default)]
pub struct SchurDirection;

impl DirectionSolver for SchurDirection {
    fn name(&self) -> &'static str {
        "schur"
    }

    fn solve(&self, sys: &NewtonSystem<'_>, delta: f64) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        let Hessian::Diagonal(diag) = sys.hessian else {
            return Err(LinalgError::InvalidStructure(
                "block elimination needs a diagonal Hessian".into(),
            ));
        };
        let theta: Vec<f64> = diag.iter().map(|d| d + delta).collect();
        let scale = theta.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        if theta.iter().any(|v| v.abs() <= THETA_FLOOR * scale || !v.is_finite()) {
            return Err(LinalgError::Singular);
        }
        let inv: Vec<f64> = theta.iter().map(|v| 1.0 / v).collect();
        let t = sys.working_set;
        let scaled_r1: Vec<f64> = sys.r1.iter().zip(&inv).map(|(r, i)| r * i).collect();
        let mut rhs = sys.r2.to_vec();
        for (p, &i) in t.iter().enumerate() {
            rhs[p] -= sys.a.row_dot(i, &scaled_r1);
        }
        let v = if t.is_empty() {
            Vec::new()
        } else {
            let mut s = sys.a.weighted_gram(t, &inv);
            for p in 0..t.len() {
                s.add_to(p, p, delta);
            }
            solve_spd(&s, &rhs)?
        };
        let mut u = sys.r1.to_vec();
        linalg::axpy(1.0, &sys.a.rows_t_times(t, &v), &mut u);
        for (ui, i) in u.iter_mut().zip(&inv) {
            *ui *= -i;
        }
        Ok((u, v))
    }
}

/// Factors the assembled `(n + |T|)` saddle matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct KktDirection;

impl DirectionSolver for KktDirection {
    fn name(&self) -> &'static str {
        "kkt"
    }

    fn solve(&self, sys: &NewtonSystem<'_>, delta: f64) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        let mut h: DenseMatrix = sys.hessian.to_dense();
        for i in 0..h.rows() {
            h.add_to(i, i, delta);
        }
        let b = sys.a.select_rows_dense(sys.working_set);
        let g1: Vec<f64> = sys.r1.iter().map(|v| -v).collect();
        let g2: Vec<f64> = sys.r2.iter().map(|v| -v).collect();
        solve_kkt_regularized(&h, &b, &g1, &g2, delta)
    }
}

/// Block elimination for diagonal Hessians, the full saddle system otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct AutoDirection;

impl DirectionSolver for AutoDirection {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, sys: &NewtonSystem<'_>, delta: f64) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        if sys.hessian.is_diagonal() {
            SchurDirection.solve(sys, delta)
        } else {
            KktDirection.solve(sys, delta)
        }
    }
}

/// Full Newton step from `(x, lambda)`: `dlambda` on the complement of `T`
/// is `-lambda`. A singular system is retried with damping `damping0`,
/// then ten times larger each time, up to [`MAX_DAMPING_RETRIES`] times.
pub fn newton_direction(
    solver: &dyn DirectionSolver,
    sys: &NewtonSystem<'_>,
    lambda: &[f64],
    damping0: f64,
) -> Result<Direction, LinalgError> {
    let mut delta = 0.0;
    let mut last_err = LinalgError::Singular;
    for attempt in 0..=MAX_DAMPING_RETRIES {
        if attempt > 0 {
            delta = if attempt == 1 { damping0 } else { delta * 10.0 };
        }
        match solver.solve(sys, delta) {
            Ok((u, v)) if u.iter().chain(&v).all(|x| x.is_finite()) => {
                let mut dlambda: Vec<f64> = lambda.iter().map(|l| -l).collect();
                for (&i, vi) in sys.working_set.iter().zip(v) {
                    dlambda[i] = vi;
                }
                return Ok(Direction {
                    dx: u,
                    dlambda,
                    damping: delta,
                });
            }
            Ok(_) => last_err = LinalgError::Singular,
            Err(e @ (LinalgError::InvalidStructure(_) | LinalgError::DimensionMismatch(_))) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}
