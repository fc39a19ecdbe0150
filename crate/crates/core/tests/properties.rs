use hsco::heaviside::{
    count_positive, default_zero_tol, fixed_point_check, normal_cone_contains, partition, project, project_all,
    tangent_cone_contains,
};
use hsco::linalg::{singular_values, solve_kkt, solve_spd, DenseMatrix, Matrix, SparseMatrix};
use hsco::HeavisideBudget;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Entries on a coarse grid so ties and exact zeros show up often.
fn grid_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-4i32..=4).prop_map(|v| v as f64 * 0.5), len)
}

fn vec_and_budget() -> impl Strategy<Value = (Vec<f64>, usize)> {
    grid_vec(2..=8).prop_flat_map(|z| {
        let m = z.len();
        (Just(z), 1..m)
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn dense(rows: usize, cols: usize, data: Vec<f64>) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

proptest! {
    #[test]
    fn projection_is_feasible_idempotent_and_nearest((z, s) in vec_and_budget()) {
        let b = HeavisideBudget::new(z.len(), s).unwrap();
        let p = project(&z, b).unwrap();
        prop_assert!(count_positive(&p, 0.0) <= s);
        prop_assert_eq!(project(&p, b).unwrap(), p.clone());
        let d = dist(&p, &z);
        for other in project_all(&z, b).unwrap() {
            prop_assert!((dist(&other, &z) - d).abs() <= 1e-12);
        }
        // Clipping every positive entry is always feasible, so it can be no closer.
        let clipped: Vec<f64> = z.iter().map(|v| v.min(0.0)).collect();
        prop_assert!(d <= dist(&clipped, &z) + 1e-12);
    }

    #[test]
    fn canonical_projection_is_in_projection_set((z, s) in vec_and_budget()) {
        let b = HeavisideBudget::new(z.len(), s).unwrap();
        let p = project(&z, b).unwrap();
        prop_assert!(project_all(&z, b).unwrap().contains(&p));
    }

    #[test]
    fn partition_covers_every_index((z, s) in vec_and_budget()) {
        let b = HeavisideBudget::new(z.len(), s).unwrap();
        let p = partition(&z, b, default_zero_tol(&z)).unwrap();
        let mut all: Vec<usize> = p.working_set.iter().chain(&p.complement).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..z.len()).collect::<Vec<_>>());
        prop_assert_eq!(p.gamma_s.len(), s.min(p.gamma_plus.len()));
        prop_assert_eq!(
            p.working_set.len(),
            p.gamma_plus.len() - p.gamma_s.len() + p.gamma_zero.len()
        );
        for &i in &p.gamma_s {
            for &j in &p.gamma_plus {
                if !p.gamma_s.contains(&j) {
                    prop_assert!(z[i] >= z[j]);
                }
            }
        }
    }

    #[test]
    fn projection_of_shift_is_a_fixed_point((z, s) in vec_and_budget(), tau in 0.1f64..3.0) {
        // y = P(z) and lambda = (z - y) / tau give a fixed pair by construction.
        let b = HeavisideBudget::new(z.len(), s).unwrap();
        let y = project(&z, b).unwrap();
        let lambda: Vec<f64> = z.iter().zip(&y).map(|(a, b)| (a - b) / tau).collect();
        prop_assert!(fixed_point_check(&y, &lambda, tau, b).unwrap());
    }

    #[test]
    fn cones_are_polar_at_full_budget(
        (z, s) in vec_and_budget(),
        dt in grid_vec(8..=8),
        dn in grid_vec(8..=8),
    ) {
        let m = z.len();
        let b = HeavisideBudget::new(m, s).unwrap();
        let y = project(&z, b).unwrap();
        let tol = default_zero_tol(&y);
        let dt = &dt[..m];
        let dn = &dn[..m];
        if tangent_cone_contains(&y, dt, b, tol).unwrap() && normal_cone_contains(&y, dn, b, tol).unwrap() {
            let inner: f64 = dt.iter().zip(dn).map(|(a, b)| a * b).sum();
            prop_assert!(inner <= 1e-12, "<d_t, d_n> = {inner}");
        }
    }

    #[test]
    fn dense_and_sparse_gram_agree(
        rows in 1usize..6,
        cols in 1usize..7,
        seed in prop::collection::vec(-3i32..=3, 42),
        w in prop::collection::vec(0.1f64..2.0, 7),
    ) {
        let data: Vec<f64> = seed[..rows * cols].iter().map(|v| *v as f64).collect();
        let d = dense(rows, cols, data);
        let sp = Matrix::Sparse(SparseMatrix::from_dense(&d));
        let dm = Matrix::Dense(d.clone());
        let idx: Vec<usize> = (0..rows).rev().collect();
        let g1 = dm.weighted_gram(&idx, &w[..cols]);
        let g2 = sp.weighted_gram(&idx, &w[..cols]);
        let a = to_na(&d.select_rows(&idx));
        let want = &a * DMatrix::from_diagonal(&DVector::from_column_slice(&w[..cols])) * a.transpose();
        for p in 0..rows {
            for q in 0..rows {
                prop_assert_eq!(g1.get(p, q), g1.get(q, p));
                prop_assert!((g1.get(p, q) - want[(p, q)]).abs() <= 1e-12);
                prop_assert!((g2.get(p, q) - want[(p, q)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spd_solve_matches_reference(
        n in 1usize..7,
        entries in prop::collection::vec(-1.0f64..1.0, 49),
        rhs in prop::collection::vec(-5.0f64..5.0, 7),
    ) {
        let b = to_na(&dense(n, n, entries[..n * n].to_vec()));
        let spd = &b * b.transpose() + DMatrix::identity(n, n);
        let ours = dense(n, n, spd.transpose().iter().copied().collect());
        let x = solve_spd(&ours, &rhs[..n]).unwrap();
        let want = spd.clone().cholesky().unwrap().solve(&DVector::from_column_slice(&rhs[..n]));
        for i in 0..n {
            prop_assert!((x[i] - want[i]).abs() <= 1e-9 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn kkt_solve_matches_reference(
        n in 2usize..6,
        t in 1usize..3,
        h in prop::collection::vec(0.5f64..3.0, 6),
        bb in prop::collection::vec(-2.0f64..2.0, 12),
        g in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let t = t.min(n);
        let hm = DenseMatrix::from_diag(&h[..n]);
        let bm = dense(t, n, bb[..t * n].to_vec());
        let big = DMatrix::from_fn(n + t, n + t, |i, j| match (i < n, j < n) {
            (true, true) => hm.get(i, j),
            (true, false) => bm.get(j - n, i),
            (false, true) => bm.get(i - n, j),
            (false, false) => 0.0,
        });
        let rhs = DVector::from_column_slice(&g[..n + t]);
        let Some(want) = big.clone().lu().solve(&rhs) else { return Ok(()) };
        if big.clone().svd(false, false).singular_values.min() < 1e-6 {
            return Ok(());
        }
        let (u, v) = solve_kkt(&hm, &bm, &g[..n], &g[n..n + t]).unwrap();
        for i in 0..n {
            prop_assert!((u[i] - want[i]).abs() <= 1e-7 * (1.0 + want[i].abs()));
        }
        for p in 0..t {
            prop_assert!((v[p] - want[n + p]).abs() <= 1e-7 * (1.0 + want[n + p].abs()));
        }
    }

    #[test]
    fn singular_values_match_reference(
        r in 1usize..6,
        c in 1usize..6,
        entries in prop::collection::vec(-3.0f64..3.0, 25),
    ) {
        let m = dense(r, c, entries[..r * c].to_vec());
        let mut ours = singular_values(&m);
        ours.sort_by(|a, b| b.total_cmp(a));
        let mut want: Vec<f64> = to_na(&m).svd(false, false).singular_values.iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b));
        }
    }
}
