use serde::{Deserialize, Serialize};

use super::{check_len, LinalgError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("row-major data", data.len(), rows * cols)?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(pos / cols.max(1), pos % cols.max(1)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec operand", x.len(), self.cols)?;
        Ok((0..self.rows).map(|i| super::dot(self.row(i), x)).collect())
    }

    /// `self^T y`
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("transposed matvec operand", y.len(), self.rows)?;
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                super::axpy(*yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let (m, k, n) = (self.rows, self.cols, other.cols);
        if m > 0 && n > 0 && k > 0 {
            // SAFETY: the strides describe row-major buffers of exactly the
            // stated shapes, and `out` does not alias either input.
            unsafe {
                matrixmultiply::dgemm(
                    m,
                    k,
                    n,
                    1.0,
                    self.data.as_ptr(),
                    k as isize,
                    1,
                    other.data.as_ptr(),
                    n as isize,
                    1,
                    0.0,
                    out.data.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        }
        Ok(out)
    }

    /// `self diag(w) self^T`, exactly symmetric. Only the lower block
    /// triangle is multiplied; the rest is mirrored.
    pub(crate) fn weighted_gram(&self, weights: &[f64]) -> DenseMatrix {
        const BLOCK: usize = 128;
        let (t, k) = (self.rows, self.cols);
        let mut scaled = self.clone();
        for p in 0..t {
            for (v, w) in scaled.row_mut(p).iter_mut().zip(weights) {
                *v *= w;
            }
        }
        let mut out = DenseMatrix::zeros(t, t);
        if k == 0 {
            return out;
        }
        for r0 in (0..t).step_by(BLOCK) {
            let rb = BLOCK.min(t - r0);
            for c0 in (0..=r0).step_by(BLOCK) {
                let cb = BLOCK.min(t - c0);
                // SAFETY: the row ranges lie inside both buffers, `self` is
                // read through transposed strides, and `out` is written only
                // inside its own (r0, c0) block.
                unsafe {
                    matrixmultiply::dgemm(
                        rb,
                        k,
                        cb,
                        1.0,
                        scaled.data.as_ptr().add(r0 * k),
                        k as isize,
                        1,
                        self.data.as_ptr().add(c0 * k),
                        1,
                        k as isize,
                        0.0,
                        out.data.as_mut_ptr().add(r0 * t + c0),
                        t as isize,
                        1,
                    );
                }
            }
        }
        for p in 0..t {
            for q in (p + 1)..t {
                out.data[p * t + q] = out.data[q * t + p];
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn scale_rows(&mut self, factors: &[f64]) {
        for (i, f) in factors.iter().enumerate() {
            for v in self.row_mut(i) {
                *v *= f;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        super::norm_inf(&self.data)
    }

    /// Largest entrywise gap between `self` and its transpose.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}
