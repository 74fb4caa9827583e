mod common;

use common::*;
use loadclust::metrics::{dtw, euclidean, pairwise, sbd, DistanceKind};
use loadclust::representation::RepresentedMatrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn dtw_matches_memoized_recursion_on_unequal_lengths() {
    let mut r = rng(101);
    for _ in 0..100 {
        let (a, b) = (r.random_range(1..=12), r.random_range(1..=12));
        let (x, y) = (random_vec(&mut r, a), random_vec(&mut r, b));
        assert_eq!(dtw(&x, &y, None).unwrap(), dtw_memo(&x, &y));
    }
}

#[test]
fn sbd_matches_shift_scan_up_to_256() {
    let mut r = rng(102);
    for d in [1, 2, 7, 64, 129, 256] {
        let (x, y) = (random_vec(&mut r, d), random_vec(&mut r, d));
        let (got, _) = sbd(&x, &y).unwrap();
        assert!((got - sbd_brute(&x, &y)).abs() < 1e-8, "d={d}");
    }
}

#[test]
fn sbd_recovers_a_known_shift() {
    let x: Vec<f64> = (0..32).map(|i| ((i as f64) / 3.0).sin() * (i as f64 / 32.0)).collect();
    let y = loadclust::metrics::shift(&x, -5);
    let (dist, s) = sbd(&x, &y).unwrap();
    assert_eq!(s, 5);
    assert!(dist < 0.2);
}

#[test]
fn pairwise_matrix_shape() {
    let mut r = rng(103);
    let m = RepresentedMatrix::from_rows(&random_rows(&mut r, 9, 6));
    for kind in [
        DistanceKind::Euclidean,
        DistanceKind::Dtw { window: Some(2) },
        DistanceKind::Sbd,
    ] {
        let dm = pairwise(&m, kind).unwrap();
        for i in 0..9 {
            assert_eq!(dm.get(i, i), 0.0);
            for j in 0..9 {
                assert!((dm.get(i, j) - dm.get(j, i)).abs() < 1e-9);
                assert!(dm.get(i, j) >= 0.0);
                if kind == DistanceKind::Sbd {
                    assert!(dm.get(i, j) <= 2.0);
                }
            }
        }
    }
}

#[test]
fn pairwise_is_independent_of_thread_count() {
    let mut r = rng(104);
    let m = RepresentedMatrix::from_rows(&random_rows(&mut r, 40, 24));
    let kind = DistanceKind::Dtw { window: None };
    let one = loadclust::with_thread_limit(1, || pairwise(&m, kind).unwrap());
    let many = loadclust::with_thread_limit(4, || pairwise(&m, kind).unwrap());
    assert_eq!(one, many);
}

fn vec_pair(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max).prop_flat_map(|d| {
        (
            prop::collection::vec(-100.0..100.0f64, d),
            prop::collection::vec(-100.0..100.0f64, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn euclidean_and_dtw_nonnegative_and_symmetric((x, y) in vec_pair(16)) {
        let e = euclidean(&x, &y).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(e, euclidean(&y, &x).unwrap());
        let w = dtw(&x, &y, None).unwrap();
        prop_assert!(w >= 0.0);
        prop_assert!((w - dtw(&y, &x, None).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn euclidean_triangle_inequality(
        (x, y, z) in (1..10usize).prop_flat_map(|d| (
            prop::collection::vec(-10.0..10.0f64, d),
            prop::collection::vec(-10.0..10.0f64, d),
            prop::collection::vec(-10.0..10.0f64, d),
        ))
    ) {
        let xz = euclidean(&x, &z).unwrap();
        prop_assert!(xz <= euclidean(&x, &y).unwrap() + euclidean(&y, &z).unwrap() + 1e-9);
    }

    #[test]
    fn dtw_with_zero_window_is_euclidean((x, y) in vec_pair(24)) {
        let w = dtw(&x, &y, Some(0)).unwrap();
        prop_assert!((w - euclidean(&x, &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sbd_scale_invariance((x, y) in vec_pair(32), a in 0.01..50.0f64, b in 0.01..50.0f64) {
        prop_assume!(x.iter().any(|v| *v != 0.0) && y.iter().any(|v| *v != 0.0));
        let base = sbd(&x, &y).unwrap().0;
        let xa: Vec<f64> = x.iter().map(|v| v * a).collect();
        let ya: Vec<f64> = y.iter().map(|v| v * a).collect();
        let yb: Vec<f64> = y.iter().map(|v| v * b).collect();
        prop_assert!((sbd(&xa, &ya).unwrap().0 - base).abs() < 1e-9);
        prop_assert!((sbd(&x, &yb).unwrap().0 - base).abs() < 1e-9);
    }

    #[test]
    fn sbd_in_range_and_matches_scan((x, y) in vec_pair(40)) {
        prop_assume!(x.iter().any(|v| *v != 0.0) && y.iter().any(|v| *v != 0.0));
        let (got, _) = sbd(&x, &y).unwrap();
        prop_assert!((0.0..=2.0).contains(&got));
        prop_assert!((got - sbd_brute(&x, &y)).abs() < 1e-8);
    }
}
