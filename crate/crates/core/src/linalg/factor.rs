use super::{check_len, norm2, DenseMatrix, LinalgError, Result};

/// Relative rank threshold against the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-10;
const CHOLESKY_PIVOT_TOL: f64 = 1e-12;
const LU_PIVOT_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-8;

/// Lower-triangular Cholesky factor `L` with `M = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = (0..i).map(|k| row[k] * y[k]).sum();
            y[i] = (y[i] - s) / row[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }
}

/// Cholesky factorization; `None` when a pivot falls below
/// `1e-12 * max diagonal`.
pub fn cholesky(m: &DenseMatrix) -> Option<Cholesky> {
    let n = m.rows();
    let max_diag = m.diagonal().iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    let floor = CHOLESKY_PIVOT_TOL * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j).to_vec();
        let d = m.get(j, j) - lj[..j].iter().map(|v| v * v).sum::<f64>();
        if !(d > floor) || d <= 0.0 {
            return None;
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let li = l.row(i);
            let s: f64 = li[..j].iter().zip(&lj[..j]).map(|(a, b)| a * b).sum();
            l.set(i, j, (m.get(i, j) - s) / djj);
        }
    }
    Some(Cholesky { l })
}

fn check_square(m: &DenseMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn residual_norm(m: &DenseMatrix, v: &[f64], rhs: &[f64]) -> f64 {
    let mv = m.matvec(v).expect("dimensions checked");
    norm2(&super::sub(&mv, rhs))
}

/// Solves a symmetric positive (semi)definite system. Cholesky first, then a
/// column-pivoted least-squares solve when a pivot collapses.
pub fn solve_spd(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_square(m, "solve_spd matrix")?;
    check_len("solve_spd rhs", rhs.len(), m.rows())?;
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    if let Some(ch) = cholesky(m) {
        return Ok(ch.solve(rhs));
    }
    let v = least_squares(m, rhs)?;
    let scale = 1.0 + norm2(rhs) + m.max_abs() * norm2(&v);
    if residual_norm(m, &v, rhs) > RESIDUAL_TOL * scale {
        return Err(LinalgError::Singular);
    }
    Ok(v)
}

/// Householder QR with column pivoting; returns a basic least-squares
/// solution, zeroing the components beyond the numerical rank.
pub fn least_squares(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    check_len("least-squares rhs", rhs.len(), rows)?;
    if rows == 0 || cols == 0 {
        return Ok(vec![0.0; cols]);
    }
    let mut a = m.clone();
    let mut b = rhs.to_vec();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut col_norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a.get(i, j).powi(2)).sum())
        .collect();
    let steps = rows.min(cols);
    let mut rank = 0;
    let mut r11 = 0.0;
    for k in 0..steps {
        let (piv, best) = col_norms[k..]
            .iter()
            .enumerate()
            .fold((k, -1.0), |acc, (o, v)| if *v > acc.1 { (k + o, *v) } else { acc });
        if piv != k {
            perm.swap(k, piv);
            col_norms.swap(k, piv);
            for i in 0..rows {
                let t = a.get(i, k);
                a.set(i, k, a.get(i, piv));
                a.set(i, piv, t);
            }
        }
        let norm_x = (k..rows).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt();
        if k == 0 {
            r11 = norm_x;
        }
        if best <= 0.0 || norm_x <= DEFAULT_RANK_TOL * r11 {
            break;
        }
        let alpha = if a.get(k, k) > 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..rows).map(|i| a.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let s: f64 = (k..rows).map(|i| v[i - k] * a.get(i, j)).sum();
                let f = 2.0 * s / vnorm2;
                for i in k..rows {
                    a.add_to(i, j, -f * v[i - k]);
                }
            }
            let s: f64 = (k..rows).map(|i| v[i - k] * b[i]).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..rows {
                b[i] -= f * v[i - k];
            }
        }
        for j in (k + 1)..cols {
            col_norms[j] = ((k + 1)..rows).map(|i| a.get(i, j).powi(2)).sum();
        }
        rank = k + 1;
    }
    let mut y = vec![0.0; cols];
    for i in (0..rank).rev() {
        let s: f64 = ((i + 1)..rank).map(|j| a.get(i, j) * y[j]).sum();
        y[i] = (b[i] - s) / a.get(i, i);
    }
    let mut x = vec![0.0; cols];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting. Fails with `Singular` when a
/// pivot drops below `1e-14 * max|M|`.
pub fn lu_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_square(m, "lu_solve matrix")?;
    check_len("lu_solve rhs", rhs.len(), m.rows())?;
    let n = m.rows();
    let mut a = m.clone();
    let mut b = rhs.to_vec();
    let floor = LU_PIVOT_TOL * m.max_abs();
    for k in 0..n {
        let (piv, best) = (k..n).fold((k, -1.0), |acc, i| {
            let v = a.get(i, k).abs();
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
        if !(best > floor) {
            return Err(LinalgError::Singular);
        }
        if piv != k {
            for j in 0..n {
                let t = a.get(k, j);
                a.set(k, j, a.get(piv, j));
                a.set(piv, j, t);
            }
            b.swap(k, piv);
        }
        let pivot = a.get(k, k);
        let pivot_row: Vec<f64> = a.row(k)[k..].to_vec();
        for i in (k + 1)..n {
            let f = a.get(i, k) / pivot;
            if f != 0.0 {
                let row = &mut a.row_mut(i)[k..];
                for (r, p) in row.iter_mut().zip(&pivot_row) {
                    *r -= f * p;
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let row = a.row(i);
        let s: f64 = ((i + 1)..n).map(|j| row[j] * x[j]).sum();
        x[i] = (b[i] - s) / row[i];
    }
    Ok(x)
}

/// Solves `[[H, B^T], [B, 0]] (u; v) = (g1; g2)` by LU on the assembled
/// `(n + t)` matrix.
pub fn solve_kkt(h: &DenseMatrix, b: &DenseMatrix, g1: &[f64], g2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    solve_kkt_regularized(h, b, g1, g2, 0.0)
}

/// As [`solve_kkt`] with `-delta I` in the lower-right block. Any `delta > 0`
/// lifts the requirement that `B` has full row rank. A singular matrix with
/// a consistent right-hand side gets a least-squares solution instead.
pub fn solve_kkt_regularized(
    h: &DenseMatrix,
    b: &DenseMatrix,
    g1: &[f64],
    g2: &[f64],
    delta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_square(h, "KKT Hessian block")?;
    let n = h.rows();
    let t = b.rows();
    if t > 0 && b.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "constraint block has {} columns, Hessian is {n}x{n}",
            b.cols()
        )));
    }
    check_len("KKT g1", g1.len(), n)?;
    check_len("KKT g2", g2.len(), t)?;
    let mut k = assemble_kkt(h, b);
    for p in n..n + t {
        k.set(p, p, -delta);
    }
    let mut rhs = g1.to_vec();
    rhs.extend_from_slice(g2);
    let sol = match lu_solve(&k, &rhs) {
        Ok(sol) if residual_norm(&k, &sol, &rhs) <= RESIDUAL_TOL * (1.0 + norm2(&rhs)) => sol,
        _ => {
            let sol = least_squares(&k, &rhs).map_err(|_| LinalgError::SingularKkt)?;
            let scale = 1.0 + norm2(&rhs) + k.max_abs() * norm2(&sol);
            if residual_norm(&k, &sol, &rhs) > RESIDUAL_TOL * scale {
                return Err(LinalgError::SingularKkt);
            }
            sol
        }
    };
    let v = sol[n..].to_vec();
    let mut u = sol;
    u.truncate(n);
    Ok((u, v))
}

pub(crate) fn assemble_kkt(h: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = h.rows();
    let t = b.rows();
    let mut k = DenseMatrix::zeros(n + t, n + t);
    for i in 0..n {
        k.row_mut(i)[..n].copy_from_slice(h.row(i));
    }
    for p in 0..t {
        for j in 0..n {
            let v = b.get(p, j);
            k.set(n + p, j, v);
            k.set(j, n + p, v);
        }
    }
    k
}

/// Singular values in descending order via one-sided Jacobi rotations on
/// the orientation with fewer columns.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let work = if m.cols() <= m.rows() { m.transpose() } else { m.clone() };
    // Rows of `work` are the vectors being orthogonalized.
    let k = work.rows();
    let mut vecs: Vec<Vec<f64>> = (0..k).map(|i| work.row(i).to_vec()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = super::dot(&vecs[p], &vecs[p]);
                let beta = super::dot(&vecs[q], &vecs[q]);
                let gamma = super::dot(&vecs[p], &vecs[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = vecs.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = vecs.iter().map(|v| norm2(v)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `tol * sigma_max`.
pub fn row_rank(m: &DenseMatrix, tol: f64) -> Result<usize> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|s| **s > tol * smax).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn spd_identity_and_diagonal() {
        let v = solve_spd(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert!(close(&v, &[1.0, 2.0, 3.0], 1e-15));
        let v = solve_spd(&DenseMatrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!(close(&v, &[1.0, 2.0], 1e-15));
    }

    #[test]
    fn spd_two_by_two_matches_closed_form_inverse() {
        let m = DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let rhs = [1.0, 2.0];
        // inverse of [[a,b],[b,d]] is [[d,-b],[-b,a]] / (ad - b^2)
        let det = 4.0 * 3.0 - 1.0;
        let expect = [(3.0 * rhs[0] - rhs[1]) / det, (4.0 * rhs[1] - rhs[0]) / det];
        let v = solve_spd(&m, &rhs).unwrap();
        assert!(close(&v, &expect, 1e-14));
        assert!(close(&expect, &[1.0 / 11.0, 7.0 / 11.0], 1e-15));
    }

    #[test]
    fn spd_rejects_asymmetric_and_bad_dims() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(solve_spd(&m, &[1.0, 1.0]), Err(LinalgError::NotSymmetric(_))));
        assert!(matches!(
            solve_spd(&DenseMatrix::identity(2), &[1.0]),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn spd_singular_falls_back_to_least_squares() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let v = solve_spd(&m, &[2.0, 2.0]).unwrap();
        assert!((v[0] + v[1] - 2.0).abs() < 1e-12);
        assert_eq!(solve_spd(&m, &[1.0, -1.0]), Err(LinalgError::Singular));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(row_rank(&DenseMatrix::identity(3), 1e-10).unwrap(), 3);
        let ones = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(row_rank(&ones, 1e-10).unwrap(), 1);
        assert_eq!(
            row_rank(&DenseMatrix::zeros(0, 3), 1e-10),
            Err(LinalgError::EmptyMatrix)
        );
        assert_eq!(row_rank(&DenseMatrix::zeros(2, 2), 1e-10).unwrap(), 0);
    }

    #[test]
    fn kkt_hand_solved_three_by_three() {
        let h = DenseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let (u, v) = solve_kkt(&h, &b, &[1.0, 1.0], &[0.0]).unwrap();
        assert!(close(&u, &[0.0, 1.0], 1e-14));
        assert!(close(&v, &[1.0], 1e-14));
    }

    #[test]
    fn kkt_without_constraints_is_plain_solve() {
        let h = DenseMatrix::identity(3);
        let b = DenseMatrix::zeros(0, 3);
        let (u, v) = solve_kkt(&h, &b, &[1.0, -2.0, 0.5], &[]).unwrap();
        assert!(close(&u, &[1.0, -2.0, 0.5], 1e-15));
        assert!(v.is_empty());
    }

    #[test]
    fn kkt_singular_reported() {
        let h = DenseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(
            solve_kkt(&h, &b, &[1.0, 1.0], &[0.0, 1.0]),
            Err(LinalgError::SingularKkt)
        );
    }

    #[test]
    fn kkt_tall_constraint_block() {
        let h = DenseMatrix::identity(1);
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(solve_kkt(&h, &b, &[0.0], &[1.0, 2.0]), Err(LinalgError::SingularKkt));
        let (u, v) = solve_kkt(&h, &b, &[0.0], &[1.0, 1.0]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && (v[0] + v[1] + 1.0).abs() < 1e-12);
        let (u, v) = solve_kkt_regularized(&h, &b, &[0.0], &[1.0, 2.0], 1e-8).unwrap();
        assert!((u[0] - 1.5).abs() < 1e-6 && (v[0] + v[1] + 1.5).abs() < 1e-6);
    }

    #[test]
    fn lu_handles_indefinite() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = lu_solve(&m, &[3.0, 4.0]).unwrap();
        assert!(close(&x, &[4.0, 3.0], 1e-15));
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = DenseMatrix::from_diag(&[3.0, -5.0, 1.0]);
        let sv = singular_values(&m);
        assert!(close(&sv, &[5.0, 3.0, 1.0], 1e-13));
    }
}
