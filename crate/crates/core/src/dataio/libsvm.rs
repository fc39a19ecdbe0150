use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Result};
use crate::linalg::{Matrix, SparseMatrix};

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly
/// increasing indices. A label equal to 1 becomes `+1`; every other label
/// becomes `-1`. Blank lines and `#` comments are skipped.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = parse_number(tokens.next().unwrap_or("")).ok_or(DataError::MalformedLine(lineno))?;
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or(DataError::MalformedLine(lineno))?;
            let idx: usize = idx.parse().map_err(|_| DataError::MalformedLine(lineno))?;
            let val = parse_number(val).ok_or(DataError::MalformedLine(lineno))?;
            if idx == 0 {
                return Err(DataError::MalformedLine(lineno));
            }
            if idx <= last {
                return Err(DataError::NonIncreasingIndex(lineno));
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        width = width.max(last);
        labels.push(if label == 1.0 { 1.0 } else { -1.0 });
        rows.push(entries);
    }
    if labels.is_empty() {
        return Err(DataError::EmptyFile);
    }
    let samples = SparseMatrix::from_row_entries(width, &rows).map_err(|e| DataError::BadDimensions(e.to_string()))?;
    Ok(Dataset {
        samples: Matrix::Sparse(samples),
        labels,
        feature_count: width,
        augmented: false,
        note: String::new(),
    })
}

fn parse_number(s: &str) -> Option<f64> {
    let v: f64 = s.replace('\u{2212}', "-").parse().ok()?;
    v.is_finite().then_some(v)
}

pub fn read_libsvm(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut ds = parse_libsvm(&text)?;
    ds.note = path.display().to_string();
    Ok(ds)
}

/// Writes nonzero entries in libsvm format; values round-trip exactly.
pub fn write_libsvm(ds: &Dataset) -> String {
    let dense;
    let sparse = match &ds.samples {
        Matrix::Sparse(m) => m,
        Matrix::Dense(m) => {
            dense = SparseMatrix::from_dense(m);
            &dense
        }
    };
    let mut out = String::new();
    for (i, label) in ds.labels.iter().enumerate() {
        out.push_str(if *label > 0.0 { "1" } else { "-1" });
        let (idx, val) = sparse.row(i);
        for (j, v) in idx.iter().zip(val) {
            let _ = write!(out, " {}:{}", j + 1, v);
        }
        out.push('\n');
    }
    out
}

/// Per-column divisors `max_i |x_ij|`; zero columns keep divisor 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub divisors: Vec<f64>,
}

impl Scaler {
    pub fn fit(ds: &Dataset) -> Self {
        let mut max = vec![0.0_f64; ds.samples.cols()];
        match &ds.samples {
            Matrix::Sparse(m) => {
                for i in 0..m.rows() {
                    let (idx, val) = m.row(i);
                    for (j, v) in idx.iter().zip(val) {
                        max[*j] = max[*j].max(v.abs());
                    }
                }
            }
            Matrix::Dense(m) => {
                for i in 0..m.rows() {
                    for (mx, v) in max.iter_mut().zip(m.row(i)) {
                        *mx = mx.max(v.abs());
                    }
                }
            }
        }
        let divisors = max.into_iter().map(|v| if v > 0.0 { v } else { 1.0 }).collect();
        Self { divisors }
    }

    /// Scales `ds` and appends the bias column unless already present.
    /// Columns beyond the fitted width (possible in a test file) are
    /// dropped.
    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let width = self.divisors.len();
        let feature_cols = if ds.augmented { width.saturating_sub(1) } else { width };
        let rows: Vec<Vec<(usize, f64)>> = (0..ds.len())
            .map(|i| {
                let mut row: Vec<(usize, f64)> = row_entries(&ds.samples, i)
                    .into_iter()
                    .filter(|(j, _)| *j < feature_cols)
                    .map(|(j, v)| (j, v / self.divisors[j]))
                    .collect();
                row.push((feature_cols, 1.0));
                row
            })
            .collect();
        let samples =
            SparseMatrix::from_row_entries(feature_cols + 1, &rows).expect("scaled entries are finite and in range");
        Dataset {
            samples: Matrix::Sparse(samples),
            labels: ds.labels.clone(),
            feature_count: feature_cols,
            augmented: true,
            note: ds.note.clone(),
        }
    }
}

fn row_entries(m: &Matrix, i: usize) -> Vec<(usize, f64)> {
    match m {
        Matrix::Sparse(s) => {
            let (idx, val) = s.row(i);
            idx.iter().copied().zip(val.iter().copied()).collect()
        }
        Matrix::Dense(d) => d
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect(),
    }
}

/// Divides each feature column by its largest magnitude and appends a
/// constant-1 column. Applying it to its own output changes nothing.
pub fn scale_and_augment(ds: &Dataset) -> Dataset {
    Scaler::fit(ds).apply(ds)
}
