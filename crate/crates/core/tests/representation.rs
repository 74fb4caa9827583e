#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use loadclust::representation::{fpca, normalize_matrix, FpcaConfig, NormalizationKind, RepresentedMatrix};
use proptest::prelude::*;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn scores_match_jacobi_pca_on_both_routes() {
    let mut r = rng(401);
    // d <= n uses the covariance, d > n the Gram matrix
    for (n, d) in [(12, 4), (5, 9)] {
        let rows = random_rows(&mut r, n, d);
        let p = 3;
        let out = fpca(&RepresentedMatrix::from_rows(&rows), &FpcaConfig::new(p)).unwrap();
        let (want, ratios) = pca_scores(&rows, p);
        for c in 0..p {
            let sign = if (0..n).map(|i| out.row(i)[c] * want[i][c]).sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for i in 0..n {
                assert!((out.row(i)[c] - sign * want[i][c]).abs() < 1e-8, "n={n} d={d} c={c}");
            }
        }
        for (a, b) in out.explained_variance_ratio().unwrap().iter().zip(&ratios) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (4..12usize, 2..7usize).prop_flat_map(|(n, d)| prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(rows in matrix()) {
        let m = RepresentedMatrix::from_rows(&rows);
        for kind in [NormalizationKind::ZScore, NormalizationKind::MinMax] {
            let once = normalize_matrix(&m, kind);
            let twice = normalize_matrix(&once, kind);
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert_eq!(once.labels(), m.labels());
        }
    }

    #[test]
    fn full_rank_projection_is_an_isometry(rows in matrix()) {
        let n = rows.len();
        let d = rows[0].len();
        let p = (n - 1).min(d);
        let m = RepresentedMatrix::from_rows(&rows);
        let out = fpca(&m, &FpcaConfig::new(p)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = dist(&rows[i], &rows[j]);
                prop_assert!((dist(out.row(i), out.row(j)) - want).abs() < 1e-8 * want.max(1.0));
            }
        }
    }

    #[test]
    fn centered_scores_ignore_column_offsets(rows in matrix(), offset in -50.0..50.0f64) {
        let p = 2.min(rows[0].len());
        let shifted: Vec<Vec<f64>> = rows.iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| v + offset * (j as f64 + 1.0)).collect())
            .collect();
        let a = fpca(&RepresentedMatrix::from_rows(&rows), &FpcaConfig::new(p)).unwrap();
        let b = fpca(&RepresentedMatrix::from_rows(&shifted), &FpcaConfig::new(p)).unwrap();
        for c in 0..p {
            let sign = if (0..rows.len()).map(|i| a.row(i)[c] * b.row(i)[c]).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            for i in 0..rows.len() {
                prop_assert!((a.row(i)[c] - sign * b.row(i)[c]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn explained_variance_ratios_are_ordered(rows in matrix()) {
        let p = (rows.len() - 1).min(rows[0].len());
        let out = fpca(&RepresentedMatrix::from_rows(&rows), &FpcaConfig::new(p)).unwrap();
        let evr = out.explained_variance_ratio().unwrap();
        prop_assert!(evr.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(evr.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(evr.iter().sum::<f64>() <= 1.0 + 1e-9);
    }
}
