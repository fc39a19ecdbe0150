//! Classification accuracy, 1-bit recovery quality, and trial aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm2, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no trials to aggregate")]
    EmptyTrialList,
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Sign with `sgn(0) = -1`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn mismatches(a0: &Matrix, x: &[f64], c: &[f64]) -> Result<usize> {
    if c.len() != a0.rows() {
        return Err(MetricsError::DimensionMismatch(format!(
            "{} labels for {} rows",
            c.len(),
            a0.rows()
        )));
    }
    let ax = a0
        .matvec(x)
        .map_err(|e| MetricsError::DimensionMismatch(e.to_string()))?;
    Ok(ax.iter().zip(c).filter(|(v, ci)| sign(**v) != **ci).count())
}

/// `1 - #{i : sgn(a_i x) != c_i} / m_eff`
pub fn classification_accuracy(a0: &Matrix, x: &[f64], c: &[f64], m_eff: usize) -> Result<f64> {
    if m_eff == 0 {
        return Err(MetricsError::DimensionMismatch("m_eff must be positive".into()));
    }
    Ok(1.0 - mismatches(a0, x, c)? as f64 / m_eff as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// `-20 log10 ||x - x_true||`, infinite on exact recovery.
    pub snr: f64,
    /// Sign disagreement with the observed (flipped) signs.
    pub hd: f64,
    /// Sign disagreement with the noiseless signs.
    pub he: f64,
}

/// Expects `x` already scaled to unit length.
pub fn recovery_metrics(
    x: &[f64],
    x_true: &[f64],
    a0: &Matrix,
    c_clean: &[f64],
    c_observed: &[f64],
) -> Result<RecoveryMetrics> {
    if x.len() != x_true.len() {
        return Err(MetricsError::DimensionMismatch(format!(
            "x has length {}, x_true {}",
            x.len(),
            x_true.len()
        )));
    }
    let diff: Vec<f64> = x.iter().zip(x_true).map(|(a, b)| a - b).collect();
    let snr = -20.0 * norm2(&diff).log10();
    let m = a0.rows() as f64;
    Ok(RecoveryMetrics {
        snr,
        hd: mismatches(a0, x, c_observed)? as f64 / m,
        he: mismatches(a0, x, c_clean)? as f64 / m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub snr: f64,
    pub hd: f64,
    pub he: f64,
    pub acc: f64,
    pub time: f64,
    pub iterations: f64,
}

impl TrialResult {
    pub fn from_recovery(r: RecoveryMetrics, time: f64, iterations: usize) -> Self {
        Self {
            snr: r.snr,
            hd: r.hd,
            he: r.he,
            acc: 1.0 - r.hd,
            time,
            iterations: iterations as f64,
        }
    }

    fn fields(&self) -> [f64; 6] {
        [self.snr, self.hd, self.he, self.acc, self.time, self.iterations]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Self {
            snr: f[0],
            hd: f[1],
            he: f[2],
            acc: f[3],
            time: f[4],
            iterations: f[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: TrialResult,
    /// Sample standard deviations; zero for a single trial.
    pub std: TrialResult,
    pub count: usize,
    /// Trials whose infinite SNR was left out of the SNR statistics.
    pub snr_excluded: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(trials: &[TrialResult]) -> Result<Aggregate> {
    if trials.is_empty() {
        return Err(MetricsError::EmptyTrialList);
    }
    let mut mean = [0.0; 6];
    let mut std = [0.0; 6];
    let mut snr_excluded = 0;
    for f in 0..6 {
        let mut column: Vec<f64> = trials.iter().map(|t| t.fields()[f]).collect();
        if f == 0 {
            let before = column.len();
            column.retain(|v| !v.is_infinite());
            snr_excluded = before - column.len();
            if column.is_empty() {
                mean[0] = f64::INFINITY;
                continue;
            }
        }
        (mean[f], std[f]) = mean_std(&column);
    }
    Ok(Aggregate {
        mean: TrialResult::from_fields(mean),
        std: TrialResult::from_fields(std),
        count: trials.len(),
        snr_excluded,
    })
}

pub const CSV_HEADER: &str = "method,n,m,k,flip,SNR,HD,HE,Time,Iter";

/// One aggregated line under [`CSV_HEADER`].
pub fn csv_row(method: &str, n: usize, m: usize, k: usize, flip: f64, agg: &Aggregate) -> String {
    let mut out = String::new();
    let t = &agg.mean;
    let _ = write!(
        out,
        "{method},{n},{m},{k},{flip},{:.4},{:.6},{:.6},{:.4},{:.2}",
        t.snr, t.hd, t.he, t.time, t.iterations
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn diag_rows(v: &[f64]) -> Matrix {
        Matrix::Dense(DenseMatrix::from_diag(v))
    }

    #[test]
    fn accuracy_examples() {
        let a0 = diag_rows(&[0.3, -0.2, 0.0, 1.0]);
        let ones = [1.0; 4];
        assert_eq!(
            classification_accuracy(&a0, &ones, &[1.0, -1.0, -1.0, 1.0], 4).unwrap(),
            1.0
        );
        let a0 = diag_rows(&[1.0, 1.0]);
        assert_eq!(
            classification_accuracy(&a0, &[1.0, 1.0], &[-1.0, -1.0], 2).unwrap(),
            0.0
        );
        let a0 = diag_rows(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            classification_accuracy(&a0, &ones, &[1.0, 1.0, 1.0, -1.0], 4).unwrap(),
            0.75
        );
        assert!(classification_accuracy(&a0, &ones, &[1.0], 4).is_err());
    }

    #[test]
    fn recovery_examples() {
        let a0 = diag_rows(&[1.0, 1.0, 1.0, 1.0]);
        let xt = [0.5, 0.5, 0.5, 0.5];
        let c = [1.0; 4];
        let r = recovery_metrics(&xt, &xt, &a0, &c, &c).unwrap();
        assert_eq!((r.snr, r.hd, r.he), (f64::INFINITY, 0.0, 0.0));

        let x = [0.6, 0.5, 0.5, 0.5];
        let r = recovery_metrics(&x, &xt, &a0, &c, &[1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!((r.snr - 20.0).abs() < 1e-12);
        assert_eq!((r.hd, r.he), (0.25, 0.0));
    }

    #[test]
    fn aggregate_examples() {
        let t = |snr| TrialResult {
            snr,
            hd: 0.1,
            he: 0.2,
            acc: 0.9,
            time: 1.0,
            iterations: 5.0,
        };
        let one = aggregate(&[t(4.0)]).unwrap();
        assert_eq!(one.mean, t(4.0));
        assert_eq!(one.std.snr, 0.0);
        assert_eq!(aggregate(&[t(4.0), t(6.0)]).unwrap().mean.snr, 5.0);

        let mut many: Vec<TrialResult> = (1..=19).map(|i| t(i as f64)).collect();
        many.push(t(f64::INFINITY));
        let agg = aggregate(&many).unwrap();
        assert_eq!(agg.snr_excluded, 1);
        assert_eq!(agg.count, 20);
        assert_eq!(agg.mean.snr, 10.0);
        assert!(matches!(aggregate(&[]), Err(MetricsError::EmptyTrialList)));
    }

    #[test]
    fn csv_layout() {
        let agg = aggregate(&[TrialResult {
            snr: 5.0,
            hd: 0.05,
            he: 0.06,
            acc: 0.95,
            time: 0.5,
            iterations: 12.0,
        }])
        .unwrap();
        assert_eq!(
            csv_row("nhst", 256, 64, 3, 0.05, &agg),
            "nhst,256,64,3,0.05,5.0000,0.050000,0.060000,0.5000,12.00"
        );
        assert_eq!(
            CSV_HEADER.split(',').count(),
            csv_row("x", 1, 1, 1, 0.0, &agg).split(',').count()
        );
    }
}
