//! Problem container and smooth objectives.
//!
//! A [`Problem`] is `min f(x)  s.t.  ||(Ax - b)_+||_0 <= s`. The two shipped
//! objective families are the hard-margin SVM energy `||Dx||^2` and the
//! smoothed `l_q` penalty with a ridge term used for 1-bit compressed sensing.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::heaviside::{HeavisideBudget, HeavisideError};
use crate::linalg::{DenseMatrix, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("label {value} at row {index} is not +1 or -1")]
    BadLabel { index: usize, value: f64 },
    #[error("row {row} does not end with the constant bias feature 1")]
    MissingBiasColumn { row: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Budget(#[from] HeavisideError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Second derivative of an objective, with a fast path for diagonal ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Hessian {
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
}

impl Hessian {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Diagonal(d) => d.len(),
            Hessian::Dense(m) => m.rows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Hessian::Diagonal(_))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Hessian::Diagonal(d) => DenseMatrix::from_diag(d),
            Hessian::Dense(m) => m.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Hessian::Diagonal(d) => d.clone(),
            Hessian::Dense(m) => m.diagonal(),
        }
    }
}

/// A twice-differentiable objective `f: R^n -> R`.
pub trait Objective: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> Hessian;

    fn hessian_is_diagonal(&self) -> bool {
        false
    }

    /// A positive definite stand-in for the Hessian, if the objective has
    /// one. Objectives that are convex can leave this unset.
    fn majorant_hessian(&self, _x: &[f64]) -> Option<Hessian> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Hessian,
}

pub fn evaluate(objective: &dyn Objective, x: &[f64]) -> Result<Evaluation> {
    if x.len() != objective.dim() {
        return Err(ModelError::DimensionMismatch(format!(
            "objective has dimension {}, point has length {}",
            objective.dim(),
            x.len()
        )));
    }
    Ok(Evaluation {
        value: objective.value(x),
        gradient: objective.gradient(x),
        hessian: objective.hessian(x),
    })
}

/// `||D x||^2` with `D = diag(1, ..., 1, d_last)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmObjective {
    n: usize,
    d_last: f64,
}

impl SvmObjective {
    /// Default weight on the bias coordinate.
    pub const DEFAULT_D_LAST: f64 = 1e-4;

    pub fn new(n: usize, d_last: f64) -> Result<Self> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("SVM dimension must be positive".into()));
        }
        if !(d_last > 0.0) || !d_last.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "d_last must be positive, got {d_last}"
            )));
        }
        Ok(Self { n, d_last })
    }

    pub fn d_last(&self) -> f64 {
        self.d_last
    }

    fn weight(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.d_last * self.d_last
        } else {
            1.0
        }
    }
}

impl Objective for SvmObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| self.weight(i) * v * v).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| 2.0 * self.weight(i) * v).collect()
    }

    fn hessian(&self, _x: &[f64]) -> Hessian {
        Hessian::Diagonal((0..self.n).map(|i| 2.0 * self.weight(i)).collect())
    }

    fn hessian_is_diagonal(&self) -> bool {
        true
    }
}

/// `sum_i (x_i^2 + eps)^(q/2) + eta ||x||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedLqObjective {
    n: usize,
    q: f64,
    eps_smooth: f64,
    eta: f64,
}

impl SmoothedLqObjective {
    pub fn new(n: usize, q: f64, eps_smooth: f64, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("dimension must be positive".into()));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(ModelError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
        }
        if !(eps_smooth > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "smoothing epsilon must be positive, got {eps_smooth}"
            )));
        }
        if !(eta >= 0.0) {
            return Err(ModelError::InvalidParameter(format!("eta must be >= 0, got {eta}")));
        }
        Ok(Self { n, q, eps_smooth, eta })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eps_smooth(&self) -> f64 {
        self.eps_smooth
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Objective for SmoothedLqObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let half_q = 0.5 * self.q;
        x.iter()
            .map(|v| (v * v + self.eps_smooth).powf(half_q) + self.eta * v * v)
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let e = 0.5 * self.q - 1.0;
        x.iter()
            .map(|v| self.q * v * (v * v + self.eps_smooth).powf(e) + 2.0 * self.eta * v)
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> Hessian {
        let e = 0.5 * self.q - 2.0;
        let (q, eps) = (self.q, self.eps_smooth);
        Hessian::Diagonal(
            x.iter()
                .map(|v| {
                    let t = v * v;
                    q * (t + eps).powf(e) * ((q - 1.0) * t + eps) + 2.0 * self.eta
                })
                .collect(),
        )
    }

    fn hessian_is_diagonal(&self) -> bool {
        true
    }

    /// Reweighted curvature `q (x_i^2 + eps)^{q/2 - 1} + 2 eta`, the weight of
    /// the quadratic upper bound of each term at `x_i`.
    fn majorant_hessian(&self, x: &[f64]) -> Option<Hessian> {
        let e = 0.5 * self.q - 1.0;
        Some(Hessian::Diagonal(
            x.iter()
                .map(|v| self.q * (v * v + self.eps_smooth).powf(e) + 2.0 * self.eta)
                .collect(),
        ))
    }
}

/// `0.5 (x - c)^T Q (x - c)` for symmetric `Q`; diagonal `Q` takes the fast
/// Hessian path.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    q: Hessian,
    center: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(q: Hessian, center: Vec<f64>) -> Result<Self> {
        if q.dim() != center.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "quadratic form is {}-dimensional, center has length {}",
                q.dim(),
                center.len()
            )));
        }
        if let Hessian::Dense(m) = &q {
            if !m.is_square() || m.asymmetry() > 1e-12 * m.max_abs().max(1.0) {
                return Err(ModelError::InvalidParameter(
                    "quadratic form must be square and symmetric".into(),
                ));
            }
        }
        Ok(Self { q, center })
    }

    /// `0.5 ||x - center||^2`
    pub fn isotropic(center: Vec<f64>) -> Self {
        Self {
            q: Hessian::Diagonal(vec![1.0; center.len()]),
            center,
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.q {
            Hessian::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            Hessian::Dense(m) => m.matvec(v).expect("dimension fixed at construction"),
        }
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = crate::linalg::sub(x, &self.center);
        0.5 * crate::linalg::dot(&d, &self.apply(&d))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&crate::linalg::sub(x, &self.center))
    }

    fn hessian(&self, _x: &[f64]) -> Hessian {
        self.q.clone()
    }

    fn hessian_is_diagonal(&self) -> bool {
        self.q.is_diagonal()
    }
}

/// An instance of `min f(x) s.t. ||(Ax - b)_+||_0 <= s`.
#[derive(Debug, Clone)]
pub struct Problem {
    objective: Arc<dyn Objective>,
    a: Matrix,
    b: Vec<f64>,
    budget: HeavisideBudget,
}

impl Problem {
    pub fn new(objective: Arc<dyn Objective>, a: Matrix, b: Vec<f64>, budget: HeavisideBudget) -> Result<Self> {
        if a.rows() != b.len() || a.rows() != budget.m() {
            return Err(ModelError::DimensionMismatch(format!(
                "A has {} rows, b has {} entries, budget expects m = {}",
                a.rows(),
                b.len(),
                budget.m()
            )));
        }
        if a.cols() != objective.dim() {
            return Err(ModelError::DimensionMismatch(format!(
                "A has {} columns, objective dimension is {}",
                a.cols(),
                objective.dim()
            )));
        }
        Ok(Self {
            objective,
            a,
            b,
            budget,
        })
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn budget(&self) -> HeavisideBudget {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Same data under a different sparsity budget.
    pub fn with_budget(&self, s: usize) -> Result<Self> {
        Ok(Self {
            budget: self.budget.with_s(s)?,
            ..self.clone()
        })
    }

    /// `A x - b`
    pub fn constraint_value(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a.matvec(x).expect("x has length n");
        for (yi, bi) in y.iter_mut().zip(&self.b) {
            *yi -= bi;
        }
        y
    }
}

fn check_labels(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|c| *c != 1.0 && *c != -1.0) {
        Some(index) => Err(ModelError::BadLabel {
            index,
            value: labels[index],
        }),
        None => Ok(()),
    }
}

fn check_rows(samples: &Matrix, labels: &[f64]) -> Result<()> {
    if samples.rows() != labels.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} samples but {} labels",
            samples.rows(),
            labels.len()
        )));
    }
    Ok(())
}

/// `A = -diag(c) A0`, `b = -1`, so that `Ax - b = 1 - c .* (A0 x)`.
pub fn svm_constraints(samples: &Matrix, labels: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    check_rows(samples, labels)?;
    check_labels(labels)?;
    let n = samples.cols();
    if n == 0 {
        return Err(ModelError::DimensionMismatch("samples have no features".into()));
    }
    let mut e_last = vec![0.0; n];
    e_last[n - 1] = 1.0;
    for row in 0..samples.rows() {
        if samples.row_dot(row, &e_last) != 1.0 {
            return Err(ModelError::MissingBiasColumn { row });
        }
    }
    let flips: Vec<f64> = labels.iter().map(|c| -c).collect();
    Ok((samples.scale_rows(&flips), vec![-1.0; labels.len()]))
}

pub fn build_svm_problem(samples: &Matrix, labels: &[f64], s: usize, d_last: f64) -> Result<Problem> {
    let (a, b) = svm_constraints(samples, labels)?;
    let objective = SvmObjective::new(a.cols(), d_last)?;
    let budget = HeavisideBudget::new(a.rows(), s)?;
    Problem::new(Arc::new(objective), a, b, budget)
}

/// Parameters of the 1-bit compressed sensing model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CsModelParams {
    /// Margin `epsilon` in `||(Ax + epsilon 1)_+||_0 <= s`.
    pub epsilon: f64,
    pub q: f64,
    pub eps_smooth: f64,
    pub eta: f64,
}

impl CsModelParams {
    /// `epsilon = 1e-3`, `eta = 0.07`, `q = 0.9`, smoothing `1/n`.
    pub fn defaults_for(n: usize) -> Self {
        Self {
            epsilon: 1e-3,
            q: 0.9,
            eps_smooth: 1.0 / n as f64,
            eta: 0.07,
        }
    }
}

/// `A = -diag(c) A0`, `b = -epsilon 1`.
pub fn cs_constraints(measurements: &Matrix, signs: &[f64], epsilon: f64) -> Result<(Matrix, Vec<f64>)> {
    check_rows(measurements, signs)?;
    check_labels(signs)?;
    if !(epsilon > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let flips: Vec<f64> = signs.iter().map(|c| -c).collect();
    Ok((measurements.scale_rows(&flips), vec![-epsilon; signs.len()]))
}

pub fn build_cs_problem(measurements: &Matrix, signs: &[f64], s: usize, params: CsModelParams) -> Result<Problem> {
    let (a, b) = cs_constraints(measurements, signs, params.epsilon)?;
    let objective = SmoothedLqObjective::new(a.cols(), params.q, params.eps_smooth, params.eta)?;
    let budget = HeavisideBudget::new(a.rows(), s)?;
    Problem::new(Arc::new(objective), a, b, budget)
}
