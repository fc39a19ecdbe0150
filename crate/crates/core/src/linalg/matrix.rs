use serde::{Deserialize, Serialize};

use super::{DenseMatrix, Result, SparseMatrix};

/// Constraint or sample matrix in either storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "storage", rename_all = "lowercase")]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Matrix {
    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows(),
            Matrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.cols(),
            Matrix::Sparse(m) => m.cols(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Matrix::Dense(m) => m.matvec(x),
            Matrix::Sparse(m) => m.matvec(x),
        }
    }

    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Matrix::Dense(m) => m.matvec_t(y),
            Matrix::Sparse(m) => m.matvec_t(y),
        }
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Matrix::Dense(m) => super::dot(m.row(i), x),
            Matrix::Sparse(m) => m.row_dot(i, x),
        }
    }

    /// `y += alpha * row_i`
    pub fn row_axpy(&self, i: usize, alpha: f64, y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => super::axpy(alpha, m.row(i), y),
            Matrix::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (j, v) in idx.iter().zip(val) {
                    y[*j] += alpha * v;
                }
            }
        }
    }

    /// `A_T^T v` for a row subset `T` with `v` indexed like `T`.
    pub fn rows_t_times(&self, rows: &[usize], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for (&i, vi) in rows.iter().zip(v) {
            if *vi != 0.0 {
                self.row_axpy(i, *vi, &mut out);
            }
        }
        out
    }

    pub fn select_rows_dense(&self, rows: &[usize]) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.select_rows(rows),
            Matrix::Sparse(m) => m.select_rows_dense(rows),
        }
    }

    /// `A_T diag(w) A_T^T` for the row subset `T`.
    pub fn weighted_gram(&self, rows: &[usize], weights: &[f64]) -> DenseMatrix {
        let t = rows.len();
        let mut g = DenseMatrix::zeros(t, t);
        match self {
            Matrix::Dense(m) => return m.select_rows(rows).weighted_gram(weights),
            Matrix::Sparse(m) => {
                let mut scratch = vec![0.0; m.cols()];
                for p in 0..t {
                    let (idx, val) = m.row(rows[p]);
                    for (j, v) in idx.iter().zip(val) {
                        scratch[*j] = v * weights[*j];
                    }
                    for q in p..t {
                        let v = m.row_dot(rows[q], &scratch);
                        g.set(p, q, v);
                        g.set(q, p, v);
                    }
                    for j in idx {
                        scratch[*j] = 0.0;
                    }
                }
            }
        }
        g
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    /// Multiplies row `i` by `factors[i]`, keeping the storage kind.
    pub fn scale_rows(&self, factors: &[f64]) -> Matrix {
        match self {
            Matrix::Dense(m) => {
                let mut out = m.clone();
                out.scale_rows(factors);
                Matrix::Dense(out)
            }
            Matrix::Sparse(m) => Matrix::Sparse(m.scale_rows(factors)),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }
}

impl From<DenseMatrix> for Matrix {
    fn from(m: DenseMatrix) -> Self {
        Matrix::Dense(m)
    }
}

impl From<SparseMatrix> for Matrix {
    fn from(m: SparseMatrix) -> Self {
        Matrix::Sparse(m)
    }
}
