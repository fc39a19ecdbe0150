use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataError, Result};
use crate::ceil_mul;
use crate::linalg::{norm2, DenseMatrix};
use crate::metrics::sign;

/// Noise level of the measurements before sign flips.
pub const NOISE_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Covariance {
    /// i.i.d. standard normal entries.
    Independent,
    /// Rows with covariance `Sigma_ij = 2^{-|i-j|}`.
    Correlated,
}

/// A synthetic 1-bit sensing instance.
///
/// Generated with ChaCha20 seeded by `seed` and standard normals from
/// `rand_distr::StandardNormal`, drawn in this order: `a0` row by row, the
/// support of `x_true`, its nonzeros, the noise, then the flipped positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsInstance {
    pub n: usize,
    pub m: usize,
    pub k_star: usize,
    pub flip_ratio: f64,
    pub covariance: Covariance,
    pub seed: u64,
    pub a0: DenseMatrix,
    /// Unit-norm signal with at most `k_star` nonzeros.
    pub x_true: Vec<f64>,
    /// `sgn(A0 x_true)`
    pub c_clean: Vec<f64>,
    /// `sgn(A0 x_true + noise)` before flipping.
    pub c_noisy: Vec<f64>,
    /// Observed signs: `c_noisy` with `flip_count` entries negated.
    pub c: Vec<f64>,
    pub flip_count: usize,
}

impl CsInstance {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: CsInstance = serde_json::from_str(text)?;
        if inst.a0.shape() != (inst.m, inst.n) || inst.x_true.len() != inst.n || inst.c.len() != inst.m {
            return Err(DataError::BadDimensions("instance fields disagree with n, m".into()));
        }
        Ok(inst)
    }
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_cs_instance(
    n: usize,
    m: usize,
    k_star: usize,
    flip_ratio: f64,
    covariance: Covariance,
    seed: u64,
) -> Result<CsInstance> {
    if n == 0 || m == 0 || k_star == 0 || k_star > n {
        return Err(DataError::BadDimensions(format!(
            "need n, m >= 1 and 1 <= k_star <= n (n = {n}, m = {m}, k_star = {k_star})"
        )));
    }
    if !(0.0..1.0).contains(&flip_ratio) {
        return Err(DataError::BadDimensions(format!(
            "flip ratio must lie in [0, 1), got {flip_ratio}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mut data = Vec::with_capacity(m * n);
    let rho: f64 = 0.5;
    let innov = (1.0 - rho * rho).sqrt();
    for _ in 0..m {
        let mut prev = 0.0;
        for j in 0..n {
            let g = normal(&mut rng);
            let v = match covariance {
                Covariance::Independent => g,
                // Sequential form of multiplying by the Cholesky factor.
                Covariance::Correlated if j == 0 => g,
                Covariance::Correlated => rho * prev + innov * g,
            };
            data.push(v);
            prev = v;
        }
    }
    let a0 = DenseMatrix::from_row_major(m, n, data).expect("generated entries are finite");

    let support = index::sample(&mut rng, n, k_star).into_vec();
    let mut x_true = vec![0.0; n];
    for &j in &support {
        x_true[j] = normal(&mut rng);
    }
    let norm = norm2(&x_true);
    x_true.iter_mut().for_each(|v| *v /= norm);

    let ax = a0.matvec(&x_true).expect("shapes agree");
    let c_clean: Vec<f64> = ax.iter().map(|v| sign(*v)).collect();
    let c_noisy: Vec<f64> = ax.iter().map(|v| sign(v + NOISE_STD * normal(&mut rng))).collect();

    let flip_count = ceil_mul(flip_ratio, m).min(m);
    let mut c = c_noisy.clone();
    for i in index::sample(&mut rng, m, flip_count).into_iter() {
        c[i] = -c[i];
    }
    Ok(CsInstance {
        n,
        m,
        k_star,
        flip_ratio,
        covariance,
        seed,
        a0,
        x_true,
        c_clean,
        c_noisy,
        c,
        flip_count,
    })
}
