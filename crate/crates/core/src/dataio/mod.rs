//! Loading labelled data and generating synthetic 1-bit sensing instances.

mod generate;
mod libsvm;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_cs_instance, Covariance, CsInstance};
pub use libsvm::{parse_libsvm, read_libsvm, scale_and_augment, write_libsvm, Scaler};

use crate::linalg::{self, Matrix};
use crate::stationarity::Iterate;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed line {0}")]
    MalformedLine(usize),
    #[error("feature indices must be strictly increasing (line {0})")]
    NonIncreasingIndex(usize),
    #[error("no samples found")]
    EmptyFile,
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("starting vector A0^T c is zero")]
    ZeroStartVector,
    #[error("invalid instance JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Labelled samples, one per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Matrix,
    /// Each entry is `+1` or `-1`.
    pub labels: Vec<f64>,
    /// Number of columns before the bias column was appended.
    pub feature_count: usize,
    /// True once a constant-1 column has been appended.
    pub augmented: bool,
    pub note: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    Svm,
    Cs,
}

/// `tau` carried by the iterates built by [`starting_point`].
pub const START_TAU: f64 = 0.5;

/// `x = 0` for SVM, `x = A0^T c / ||A0^T c||` for 1-bit sensing; `lambda = 1`
/// in both cases.
pub fn starting_point(kind: ProblemKind, a0: &Matrix, c: &[f64]) -> Result<Iterate> {
    if c.len() != a0.rows() {
        return Err(DataError::BadDimensions(format!(
            "{} labels for {} rows",
            c.len(),
            a0.rows()
        )));
    }
    let x = match kind {
        ProblemKind::Svm => vec![0.0; a0.cols()],
        ProblemKind::Cs => {
            let mut v = a0.matvec_t(c).map_err(|e| DataError::BadDimensions(e.to_string()))?;
            let norm = linalg::norm2(&v);
            if norm == 0.0 {
                return Err(DataError::ZeroStartVector);
            }
            v.iter_mut().for_each(|x| *x /= norm);
            v
        }
    };
    Ok(Iterate {
        x,
        lambda: vec![1.0; a0.rows()],
        tau: START_TAU,
    })
}
