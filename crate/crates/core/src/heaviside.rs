//! Set-level machinery for `S = { z : ||z_+||_0 <= s }`.
//!
//! Index conventions are 0-based throughout. Zero classification uses a
//! tolerance `zeta`; [`default_zero_tol`] gives the scale-relative value
//! `1e-10 * (1 + ||z||_inf)` used by every caller that does not pass its own.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::norm_inf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeavisideError {
    #[error("vector has length {got}, budget expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("budget requires 1 <= s < m, got s = {s}, m = {m}")]
    InvalidBudget { m: usize, s: usize },
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("point has {positives} positive entries, budget allows {s}")]
    InfeasiblePoint { positives: usize, s: usize },
    #[error("projection enumeration is limited to m <= {limit}, got {m}")]
    TooLarge { m: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, HeavisideError>;

/// Relative scale of the zero band.
pub const ZERO_TOL_SCALE: f64 = 1e-10;

/// Cap for [`project_all`], which enumerates tie combinations.
pub const PROJECT_ALL_LIMIT: usize = 20;

pub fn default_zero_tol(z: &[f64]) -> f64 {
    ZERO_TOL_SCALE * (1.0 + norm_inf(z))
}

/// Ambient dimension `m` and sparsity budget `s` with `1 <= s < m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeavisideBudget {
    m: usize,
    s: usize,
}

impl HeavisideBudget {
    pub fn new(m: usize, s: usize) -> Result<Self> {
        if s == 0 || s >= m {
            return Err(HeavisideError::InvalidBudget { m, s });
        }
        Ok(Self { m, s })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Same ambient dimension, different budget.
    pub fn with_s(&self, s: usize) -> Result<Self> {
        Self::new(self.m, s)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.m {
            return Err(HeavisideError::DimensionMismatch {
                got: v.len(),
                want: self.m,
            });
        }
        Ok(())
    }
}

/// The index sets of `z` together with the canonical working set `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPartition {
    pub gamma_plus: Vec<usize>,
    pub gamma_zero: Vec<usize>,
    pub gamma_minus: Vec<usize>,
    /// The `min(s, |gamma_plus|)` largest positive entries.
    pub gamma_s: Vec<usize>,
    /// `(gamma_plus \ gamma_s) ∪ gamma_zero`, ascending.
    pub working_set: Vec<usize>,
    /// `gamma_s ∪ gamma_minus`, ascending.
    pub complement: Vec<usize>,
    pub zero_tol: f64,
}

impl IndexPartition {
    pub fn positives(&self) -> usize {
        self.gamma_plus.len()
    }
}

/// Canonical member of the working-set family: positives are ranked by value
/// (descending) with ties broken by the smaller index, and the first
/// `min(s, |gamma_plus|)` of them form `gamma_s`.
pub fn partition(z: &[f64], budget: HeavisideBudget, zero_tol: f64) -> Result<IndexPartition> {
    budget.check(z)?;
    Ok(partition_unchecked(z, budget.s, zero_tol))
}

pub(crate) fn partition_unchecked(z: &[f64], s: usize, zero_tol: f64) -> IndexPartition {
    let mut gamma_plus = Vec::new();
    let mut gamma_zero = Vec::new();
    let mut gamma_minus = Vec::new();
    for (i, v) in z.iter().enumerate() {
        if v.abs() <= zero_tol {
            gamma_zero.push(i);
        } else if *v > 0.0 {
            gamma_plus.push(i);
        } else {
            gamma_minus.push(i);
        }
    }
    let mut ranked = gamma_plus.clone();
    ranked.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let keep = s.min(ranked.len());
    let mut gamma_s = ranked[..keep].to_vec();
    gamma_s.sort_unstable();
    let mut working_set: Vec<usize> = ranked[keep..].to_vec();
    working_set.extend_from_slice(&gamma_zero);
    working_set.sort_unstable();
    let mut complement = gamma_s.clone();
    complement.extend_from_slice(&gamma_minus);
    complement.sort_unstable();
    IndexPartition {
        gamma_plus,
        gamma_zero,
        gamma_minus,
        gamma_s,
        working_set,
        complement,
        zero_tol,
    }
}

/// The `s`-th largest entry of `z_+`; zero when fewer than `s` entries are
/// positive.
pub fn sth_largest_positive(z: &[f64], s: usize) -> f64 {
    assert!(s >= 1 && s <= z.len(), "need 1 <= s <= len(z)");
    let mut pos: Vec<f64> = z.iter().copied().filter(|v| *v > 0.0).collect();
    if pos.len() < s {
        return 0.0;
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    pos[s - 1]
}

pub fn count_positive(z: &[f64], zero_tol: f64) -> usize {
    z.iter().filter(|v| **v > zero_tol).count()
}

/// Canonical projection onto `S`: zero on the canonical working set, `z`
/// elsewhere.
pub fn project(z: &[f64], budget: HeavisideBudget) -> Result<Vec<f64>> {
    let p = partition(z, budget, default_zero_tol(z))?;
    let mut out = z.to_vec();
    for &i in &p.working_set {
        out[i] = 0.0;
    }
    Ok(out)
}

/// Every working set in the family for `z`: all admissible choices of
/// `gamma_s` among entries tied at the cut-off value.
pub fn working_sets_all(z: &[f64], budget: HeavisideBudget, zero_tol: f64) -> Result<Vec<Vec<usize>>> {
    budget.check(z)?;
    if z.len() > PROJECT_ALL_LIMIT {
        return Err(HeavisideError::TooLarge {
            m: z.len(),
            limit: PROJECT_ALL_LIMIT,
        });
    }
    let base = partition_unchecked(z, budget.s, zero_tol);
    let keep = budget.s.min(base.gamma_plus.len());
    if keep == base.gamma_plus.len() {
        return Ok(vec![base.working_set]);
    }
    let mut ranked = base.gamma_plus.clone();
    ranked.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let cut = z[ranked[keep - 1]];
    let above: Vec<usize> = ranked.iter().copied().filter(|&i| z[i] > cut).collect();
    let tied: Vec<usize> = ranked.iter().copied().filter(|&i| z[i] == cut).collect();
    let need = keep - above.len();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << tied.len()) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let mut t: Vec<usize> = ranked
            .iter()
            .copied()
            .filter(|i| !above.contains(i))
            .filter(|i| tied.iter().position(|t| t == i).is_none_or(|p| mask & (1 << p) == 0))
            .collect();
        t.extend_from_slice(&base.gamma_zero);
        t.sort_unstable();
        out.push(t);
    }
    out.sort();
    Ok(out)
}

/// The full projection set, one element per working set. Limited to small
/// `m` since ties can produce combinatorially many members.
pub fn project_all(z: &[f64], budget: HeavisideBudget) -> Result<Vec<Vec<f64>>> {
    let sets = working_sets_all(z, budget, default_zero_tol(z))?;
    Ok(sets
        .into_iter()
        .map(|t| {
            let mut u = z.to_vec();
            for i in t {
                u[i] = 0.0;
            }
            u
        })
        .collect())
}

/// Whether `y` is a fixed point of `u -> P_S(u + tau * lambda)`, tested via
/// the closed-form conditions: `||y_+||_0 <= s`, `lambda` vanishes on
/// `supp(y)`, and `tau * lambda_i` lies in `[0, y_[s]]` off the support.
pub fn fixed_point_check(y: &[f64], lambda: &[f64], tau: f64, budget: HeavisideBudget) -> Result<bool> {
    let scale = norm_inf(y).max(tau * norm_inf(lambda));
    fixed_point_check_with_tol(y, lambda, tau, budget, ZERO_TOL_SCALE * (1.0 + scale))
}

pub fn fixed_point_check_with_tol(
    y: &[f64],
    lambda: &[f64],
    tau: f64,
    budget: HeavisideBudget,
    zero_tol: f64,
) -> Result<bool> {
    budget.check(y)?;
    budget.check(lambda)?;
    if !(tau > 0.0) {
        return Err(HeavisideError::NonPositiveTau(tau));
    }
    if count_positive(y, zero_tol) > budget.s {
        return Ok(false);
    }
    let y_s = sth_largest_positive_tol(y, budget.s, zero_tol);
    for (yi, li) in y.iter().zip(lambda) {
        let scaled = tau * li;
        if yi.abs() > zero_tol {
            if scaled.abs() > zero_tol {
                return Ok(false);
            }
        } else if scaled < -zero_tol || scaled > y_s + zero_tol {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sth_largest_positive_tol(z: &[f64], s: usize, zero_tol: f64) -> f64 {
    let mut pos: Vec<f64> = z.iter().copied().filter(|v| *v > zero_tol).collect();
    if pos.len() < s {
        return 0.0;
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    pos[s - 1]
}

fn check_feasible(z: &[f64], budget: HeavisideBudget, zero_tol: f64) -> Result<usize> {
    budget.check(z)?;
    let positives = count_positive(z, zero_tol);
    if positives > budget.s {
        return Err(HeavisideError::InfeasiblePoint { positives, s: budget.s });
    }
    Ok(positives)
}

/// Bouligand tangent cone membership: at most `s - |gamma_plus|` of the
/// zero-band coordinates of `d` may be positive.
pub fn tangent_cone_contains(z: &[f64], d: &[f64], budget: HeavisideBudget, zero_tol: f64) -> Result<bool> {
    let positives = check_feasible(z, budget, zero_tol)?;
    budget.check(d)?;
    let rising = z
        .iter()
        .zip(d)
        .filter(|(zi, di)| zi.abs() <= zero_tol && **di > zero_tol)
        .count();
    Ok(rising <= budget.s - positives)
}

/// Fréchet normal cone membership. With exactly `s` positives the cone is
/// `{d : d_i = 0 off the zero band, d_i >= 0 on it}`; with fewer it is `{0}`.
pub fn normal_cone_contains(z: &[f64], d: &[f64], budget: HeavisideBudget, zero_tol: f64) -> Result<bool> {
    let positives = check_feasible(z, budget, zero_tol)?;
    budget.check(d)?;
    if positives < budget.s {
        return Ok(d.iter().all(|di| di.abs() <= zero_tol));
    }
    Ok(z.iter().zip(d).all(|(zi, di)| {
        if zi.abs() > zero_tol {
            di.abs() <= zero_tol
        } else {
            *di >= -zero_tol
        }
    }))
}
