//! Stationary equations `F(w; T) = 0`, their Jacobian, and point verifiers.
//!
//! For a primal-dual pair `w = (x; lambda)` and a working set `T`,
//!
//! ```text
//! F(w; T) = [ grad f(x) + A_T^T lambda_T ;  A_T x - b_T ;  lambda_{~T} ]
//! ```
//!
//! A pair is tau-stationary exactly when `F(w; T) = 0` for the working set
//! of `z = Ax - b + tau lambda`, which is what the Newton solvers drive to
//! zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heaviside::{
    self, count_positive, fixed_point_check_with_tol, normal_cone_contains, partition_unchecked, HeavisideError,
    ZERO_TOL_SCALE,
};
use crate::linalg::{self, norm2, norm_inf, row_rank, singular_values, DenseMatrix, Matrix};
use crate::model::{evaluate, ModelError, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationarityError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("iterate has a non-finite entry")]
    NonFinite,
    #[error("active-set rows have rank {rank} < {size}")]
    RankDeficientActiveSet { rank: usize, size: usize },
    #[error("working-set index {0} out of range")]
    BadIndex(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Heaviside(#[from] HeavisideError),
}

pub type Result<T> = std::result::Result<T, StationarityError>;

/// Primal-dual pair plus the shift `tau` defining `z = Ax - b + tau lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tau: f64,
}

impl Iterate {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(StationarityError::InvalidTau(tau));
        }
        if x.iter().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(StationarityError::NonFinite);
        }
        Ok(Self { x, lambda, tau })
    }

    pub fn check_dims(&self, problem: &Problem) -> Result<()> {
        if self.x.len() != problem.n() || self.lambda.len() != problem.m() {
            return Err(StationarityError::DimensionMismatch(format!(
                "iterate is ({}, {}), problem is n = {}, m = {}",
                self.x.len(),
                self.lambda.len(),
                problem.n(),
                problem.m()
            )));
        }
        Ok(())
    }

    /// `z = Ax - b + tau lambda`
    pub fn shifted(&self, problem: &Problem) -> Vec<f64> {
        let mut z = problem.constraint_value(&self.x);
        for (zi, li) in z.iter_mut().zip(&self.lambda) {
            *zi += self.tau * li;
        }
        z
    }

    /// Stacks `(x; lambda)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut w = self.x.clone();
        w.extend_from_slice(&self.lambda);
        w
    }
}

fn check_working_set(t: &[usize], m: usize) -> Result<()> {
    if let Some(&bad) = t.iter().find(|&&i| i >= m) {
        return Err(StationarityError::BadIndex(bad));
    }
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StationarityError::DimensionMismatch(
            "working set must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Indices of `0..m` not in the sorted set `t`.
pub fn complement_of(t: &[usize], m: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(m - t.len());
    let mut k = 0;
    for i in 0..m {
        if k < t.len() && t[k] == i {
            k += 1;
        } else {
            out.push(i);
        }
    }
    out
}

pub(crate) fn residual_with_gradient(problem: &Problem, w: &Iterate, t: &[usize], gradient: &[f64]) -> Vec<f64> {
    let a = problem.a();
    let lambda_t: Vec<f64> = t.iter().map(|&i| w.lambda[i]).collect();
    let mut out = gradient.to_vec();
    linalg::axpy(1.0, &a.rows_t_times(t, &lambda_t), &mut out);
    for &i in t {
        out.push(a.row_dot(i, &w.x) - problem.b()[i]);
    }
    for i in complement_of(t, problem.m()) {
        out.push(w.lambda[i]);
    }
    out
}

/// The stacked residual `F(w; T)` of length `n + m`.
pub fn residual(problem: &Problem, w: &Iterate, t: &[usize]) -> Result<Vec<f64>> {
    w.check_dims(problem)?;
    check_working_set(t, problem.m())?;
    let g = evaluate(problem.objective(), &w.x)?.gradient;
    Ok(residual_with_gradient(problem, w, t, &g))
}

/// Jacobian of `F(·; T)` under the variable order `(x; lambda_T; lambda_~T)`:
///
/// ```text
/// [ hess f   A_T^T   0 ]
/// [ A_T      0       0 ]
/// [ 0        0       I ]
/// ```
pub fn jacobian(problem: &Problem, w: &Iterate, t: &[usize]) -> Result<DenseMatrix> {
    w.check_dims(problem)?;
    check_working_set(t, problem.m())?;
    let (n, m) = (problem.n(), problem.m());
    let hess = evaluate(problem.objective(), &w.x)?.hessian.to_dense();
    let a_t = problem.a().select_rows_dense(t);
    let mut jac = DenseMatrix::zeros(n + m, n + m);
    for i in 0..n {
        jac.row_mut(i)[..n].copy_from_slice(hess.row(i));
    }
    for p in 0..t.len() {
        for j in 0..n {
            let v = a_t.get(p, j);
            jac.set(j, n + p, v);
            jac.set(n + p, j, v);
        }
    }
    for k in (n + t.len())..(n + m) {
        jac.set(k, k, 1.0);
    }
    Ok(jac)
}

/// Outcome of checking a candidate point. `tau_star` and friends are `None`
/// when infinite or unavailable; `diagnostics_note` explains which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `||F(w; T)||` for the canonical working set of `z = Ax - b + tau lambda`.
    pub residual_norm: f64,
    /// `||grad f(x) + A^T lambda||`
    pub lagrangian_gradient_norm: f64,
    pub is_tau_stationary: bool,
    pub is_kkt: bool,
    pub feasible: bool,
    /// Number of entries of `Ax - b` above the zero band.
    pub positives: usize,
    pub s: usize,
    pub tau: f64,
    /// Relative tolerance supplied by the caller.
    pub relative_tol: f64,
    /// Absolute width of the zero band used for index classification.
    pub zero_band: f64,
    pub active_set: Vec<usize>,
    pub working_set: Vec<usize>,
    pub tau_star: Option<f64>,
    pub tau_star_projection: Option<f64>,
    pub sigma_min_hj: Option<f64>,
    pub c_star: Option<f64>,
    pub big_c_star: Option<f64>,
    pub diagnostics_note: Option<String>,
}

/// Constants attached to a stationary point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// `y_[s] / max_i lambda_i`; `None` means `+inf` (no positive multiplier).
    pub tau_star: Option<f64>,
    /// `y_[s] / max_i |(Pi grad f)_i|` with `Pi = (A_J A_J^T)^{-1} A_J`.
    pub tau_star_projection: Option<f64>,
    /// Smallest singular value of `H(J) = [[hess f, A_J^T], [A_J, 0]]`.
    pub sigma_min_hj: Option<f64>,
    /// `2 / min(min_{J' ⊆ J} sigma_min(H(J')), 1)`, only for `|J| <= 12`.
    pub c_star: Option<f64>,
    /// `2 max(||H(J)||, 1)`
    pub big_c_star: Option<f64>,
    pub note: Option<String>,
}

/// Largest active set for which the subset minimum is enumerated.
pub const C_STAR_ENUMERATION_LIMIT: usize = 12;
/// Largest `n + |J|` for which `H(J)` is decomposed densely.
pub const DENSE_SVD_LIMIT: usize = 600;

fn zero_band(y: &[f64], w: &Iterate, relative_tol: f64) -> f64 {
    relative_tol * (1.0 + norm_inf(y).max(w.tau * norm_inf(&w.lambda)))
}

/// Rows of `Ax - b` inside the zero band.
pub fn active_set(y: &[f64], band: f64) -> Vec<usize> {
    y.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= band)
        .map(|(i, _)| i)
        .collect()
}

/// Checks tau-stationarity and the KKT conditions at `w`. `relative_tol`
/// scales both the gradient test and the zero band; pass
/// [`ZERO_TOL_SCALE`] for exact-arithmetic style checks.
pub fn verify_stationary(problem: &Problem, w: &Iterate, relative_tol: f64) -> Result<StationarityReport> {
    w.check_dims(problem)?;
    let budget = problem.budget();
    let g = evaluate(problem.objective(), &w.x)?.gradient;
    let mut lag = g.clone();
    linalg::axpy(1.0, &problem.a().matvec_t(&w.lambda).expect("dims checked"), &mut lag);
    let lag_norm = norm2(&lag);
    let gradient_ok = lag_norm <= relative_tol * (1.0 + norm2(&g));

    let y = problem.constraint_value(&w.x);
    let band = zero_band(&y, w, relative_tol);
    let positives = count_positive(&y, band);
    let feasible = positives <= budget.s();
    let fixed = fixed_point_check_with_tol(&y, &w.lambda, w.tau, budget, band)?;
    let in_normal_cone = feasible && normal_cone_contains(&y, &w.lambda, budget, band)?;

    let z = w.shifted(problem);
    let part = partition_unchecked(&z, budget.s(), band);
    let res = residual_with_gradient(problem, w, &part.working_set, &g);

    let diag = match diagnostics(problem, w, relative_tol) {
        Ok(d) => d,
        Err(e) => Diagnostics {
            note: Some(e.to_string()),
            ..Default::default()
        },
    };

    Ok(StationarityReport {
        residual_norm: norm2(&res),
        lagrangian_gradient_norm: lag_norm,
        is_tau_stationary: gradient_ok && fixed,
        is_kkt: gradient_ok && in_normal_cone && feasible,
        feasible,
        positives,
        s: budget.s(),
        tau: w.tau,
        relative_tol,
        zero_band: band,
        active_set: active_set(&y, band),
        working_set: part.working_set,
        tau_star: diag.tau_star,
        tau_star_projection: diag.tau_star_projection,
        sigma_min_hj: diag.sigma_min_hj,
        c_star: diag.c_star,
        big_c_star: diag.big_c_star,
        diagnostics_note: diag.note,
    })
}

/// Whether some `m - s` rows of `A` are linearly independent, i.e. whether
/// the constraint set is guaranteed nonempty.
pub fn feasibility_rank_check(a: &Matrix, s: usize) -> bool {
    let m = a.rows();
    let need = m.saturating_sub(s);
    if need == 0 {
        return true;
    }
    match row_rank(&a.to_dense(), linalg::DEFAULT_RANK_TOL) {
        Ok(rank) => rank >= need,
        Err(_) => false,
    }
}

fn saddle_matrix(hess: &DenseMatrix, a_j: &DenseMatrix) -> DenseMatrix {
    let n = hess.rows();
    let t = a_j.rows();
    let mut h = DenseMatrix::zeros(n + t, n + t);
    for i in 0..n {
        h.row_mut(i)[..n].copy_from_slice(hess.row(i));
    }
    for p in 0..t {
        for j in 0..n {
            h.set(n + p, j, a_j.get(p, j));
            h.set(j, n + p, a_j.get(p, j));
        }
    }
    h
}

/// The constants `tau_*` (both forms), `sigma_min(H(J))`, `c_*` and `C_*`
/// at `w`, with `J` the active set of `Ax - b`.
pub fn diagnostics(problem: &Problem, w: &Iterate, relative_tol: f64) -> Result<Diagnostics> {
    w.check_dims(problem)?;
    let s = problem.budget().s();
    let y = problem.constraint_value(&w.x);
    let band = zero_band(&y, w, relative_tol);
    let j = active_set(&y, band);
    let a_j = problem.a().select_rows_dense(&j);
    if !j.is_empty() {
        let rank = row_rank(&a_j, linalg::DEFAULT_RANK_TOL).unwrap_or(0);
        if rank < j.len() {
            return Err(StationarityError::RankDeficientActiveSet { rank, size: j.len() });
        }
    }
    let eval = evaluate(problem.objective(), &w.x)?;
    let y_s = heaviside::sth_largest_positive(&y, s);

    let max_lambda = w.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_star = (max_lambda > band).then(|| y_s / max_lambda);

    let tau_star_projection = if j.is_empty() {
        None
    } else {
        let gram = a_j.matmul(&a_j.transpose()).expect("square gram");
        let ag = a_j.matvec(&eval.gradient).expect("dims");
        let pi_g = linalg::solve_spd(&gram, &ag)
            .map_err(|_| StationarityError::RankDeficientActiveSet { rank: 0, size: j.len() })?;
        let denom = norm_inf(&pi_g);
        (denom > 0.0).then(|| y_s / denom)
    };

    let mut out = Diagnostics {
        tau_star,
        tau_star_projection,
        ..Default::default()
    };
    let n = problem.n();
    if n + j.len() > DENSE_SVD_LIMIT {
        out.note = Some(format!(
            "H(J) is {}x{}; singular values skipped above {DENSE_SVD_LIMIT}",
            n + j.len(),
            n + j.len()
        ));
        return Ok(out);
    }
    let hess = eval.hessian.to_dense();
    let sv = singular_values(&saddle_matrix(&hess, &a_j));
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    out.sigma_min_hj = Some(sigma_min);
    out.big_c_star = Some(2.0 * sv.first().copied().unwrap_or(0.0).max(1.0));
    if j.len() <= C_STAR_ENUMERATION_LIMIT {
        let mut smallest = f64::INFINITY;
        for mask in 0u32..(1u32 << j.len()) {
            let rows: Vec<usize> = (0..j.len()).filter(|b| mask & (1 << b) != 0).collect();
            let sub = a_j.select_rows(&rows);
            let sv = singular_values(&saddle_matrix(&hess, &sub));
            smallest = smallest.min(sv.last().copied().unwrap_or(0.0));
        }
        out.c_star = Some(2.0 / smallest.min(1.0));
    } else {
        out.note = Some(format!(
            "c_* needs 2^{} subsets; only sigma_min(H(J)) reported",
            j.len()
        ));
    }
    Ok(out)
}

/// Default relative tolerance for [`verify_stationary`].
pub const DEFAULT_RELATIVE_TOL: f64 = ZERO_TOL_SCALE;
