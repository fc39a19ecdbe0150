use serde::{Deserialize, Serialize};

use super::{check_len, DenseMatrix, LinalgError, Result};

/// Compressed sparse row matrix. Only products and row extraction are
/// supported; factorizations densify the (small) blocks they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, offsets: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_len("row offsets", offsets.len(), rows + 1)?;
        if indices.len() != values.len() {
            return Err(LinalgError::InvalidStructure(format!(
                "{} column indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if offsets[0] != 0 || offsets[rows] != indices.len() {
            return Err(LinalgError::InvalidStructure(
                "offsets must start at 0 and end at nnz".into(),
            ));
        }
        for i in 0..rows {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            if lo > hi {
                return Err(LinalgError::InvalidStructure(format!("offsets decrease at row {i}")));
            }
            let row_idx = &indices[lo..hi];
            if row_idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidStructure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if row_idx.last().is_some_and(|&j| j >= cols) {
                return Err(LinalgError::InvalidStructure(format!(
                    "column index out of range in row {i}"
                )));
            }
            for (k, v) in values[lo..hi].iter().enumerate() {
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite(i, row_idx[k]));
                }
                if *v == 0.0 {
                    return Err(LinalgError::InvalidStructure(format!(
                        "explicit zero stored in row {i}"
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    /// Builds from per-row `(column, value)` lists; zeros are dropped and
    /// columns must already be strictly increasing.
    pub fn from_row_entries(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for r in rows {
            for &(j, v) in r {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self::new(rows.len(), cols, offsets, indices, values)
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..m.rows() {
            for (j, v) in m.row(i).iter().enumerate() {
                if *v != 0.0 {
                    indices.push(j);
                    values.push(*v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(j, v)| v * x[*j]).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("sparse matvec operand", x.len(), self.cols)?;
        Ok((0..self.rows).map(|i| self.row_dot(i, x)).collect())
    }

    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("sparse transposed matvec operand", y.len(), self.rows)?;
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            let (idx, val) = self.row(i);
            for (j, v) in idx.iter().zip(val) {
                out[*j] += yi * v;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (j, v) in idx.iter().zip(val) {
                m.set(i, *j, *v);
            }
        }
        m
    }

    pub fn select_rows_dense(&self, rows: &[usize]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows.len(), self.cols);
        for (r, &i) in rows.iter().enumerate() {
            let (idx, val) = self.row(i);
            for (j, v) in idx.iter().zip(val) {
                m.set(r, *j, *v);
            }
        }
        m
    }

    /// Returns a copy with row `i` multiplied by `factors[i]`; rows scaled by
    /// zero become empty.
    pub fn scale_rows(&self, factors: &[f64]) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(j, v)| (*j, v * factors[i])).collect()
            })
            .collect();
        Self::from_row_entries(self.cols, &rows).expect("scaling preserves structure")
    }
}
