//! Dissimilarity measures between series: euclidean, dynamic time warping
//! with an optional Sakoe-Chiba band, and the shape-based distance (SBD)
//! used by k-shape.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::par;
use crate::representation::RepresentedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    Euclidean,
    Dtw {
        /// Sakoe-Chiba half-width in steps; `None` is unconstrained.
        window: Option<usize>,
    },
    Sbd,
}

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Dtw { .. } => "dtw",
            DistanceKind::Sbd => "sbd",
        }
    }
}

/// Anything that can measure the dissimilarity of two series.
pub trait Distance: Sync {
    fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, MetricError>;
}

impl Distance for DistanceKind {
    fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
        match *self {
            DistanceKind::Euclidean => euclidean(x, y),
            DistanceKind::Dtw { window } => dtw(x, y, window),
            DistanceKind::Sbd => sbd(x, y).map(|(d, _)| d),
        }
    }
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    Ok(squared_euclidean(x, y)?.sqrt())
}

pub fn squared_euclidean(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(sq_dist(x, y))
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Dynamic time warping with squared-difference local cost; returns the
/// square root of the accumulated cost of the best warping path.
///
/// Steps are match, insertion and deletion. With `window = Some(w)` cells with
/// `|i - j| > w` are excluded, so `w` must cover the length difference.
pub fn dtw(x: &[f64], y: &[f64], window: Option<usize>) -> Result<f64, MetricError> {
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return Err(MetricError::EmptySeries);
    }
    let diff = n.abs_diff(m);
    let w = match window {
        Some(w) if w < diff => return Err(MetricError::InfeasibleWindow { window: w, diff }),
        Some(w) => w,
        None => n.max(m),
    };

    // two rolling rows over y, index 0 is the virtual border
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(w).max(1);
        let hi = (i + w).min(m);
        for j in lo..=hi {
            let c = x[i - 1] - y[j - 1];
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = c * c + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m].sqrt())
}

/// Shape-based distance: `1 - max_s NCC_s(x, y)` over all shifts
/// `s ∈ [-(d-1), d-1]` of the zero-padded cross-correlation.
///
/// The returned shift `s` is the one for which `y[i - s]` best lines up with
/// `x[i]`; see [`shift`]. Ties go to the smallest `|s|`, negative first.
pub fn sbd(x: &[f64], y: &[f64]) -> Result<(f64, isize), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    let norm = (dot(x, x) * dot(y, y)).sqrt();
    if norm == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let (best, s) = max_cross_correlation(x, y);
    Ok(((1.0 - best / norm).clamp(0.0, 2.0), s))
}

/// As [`sbd`] but a zero-norm input yields distance 1 (no correlation) at
/// shift 0 instead of an error. Used inside k-shape, where flat series occur.
pub(crate) fn sbd_lenient(x: &[f64], y: &[f64]) -> (f64, isize) {
    let norm = (dot(x, x) * dot(y, y)).sqrt();
    if norm == 0.0 {
        return (1.0, 0);
    }
    let (best, s) = max_cross_correlation(x, y);
    ((1.0 - best / norm).clamp(0.0, 2.0), s)
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `CC_s = Σ_i x[i] · y[i - s]`, direct scan in the order 0, -1, 1, -2, 2, ...
fn max_cross_correlation(x: &[f64], y: &[f64]) -> (f64, isize) {
    let d = x.len() as isize;
    let cc = |s: isize| -> f64 {
        let (xs, ys) = if s >= 0 {
            (&x[s as usize..], &y[..(d - s) as usize])
        } else {
            (&x[..(d + s) as usize], &y[(-s) as usize..])
        };
        dot(xs, ys)
    };
    let mut best = (cc(0), 0isize);
    for a in 1..d {
        for s in [-a, a] {
            let v = cc(s);
            if v > best.0 {
                best = (v, s);
            }
        }
    }
    best
}

/// Zero-padded shift: `out[i] = y[i - s]` where that index exists, else 0.
pub fn shift(y: &[f64], s: isize) -> Vec<f64> {
    let d = y.len() as isize;
    (0..d)
        .map(|i| {
            let k = i - s;
            if (0..d).contains(&k) {
                y[k as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Symmetric n×n dissimilarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
    kind: DistanceKind,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Wraps a precomputed symmetric matrix.
    pub fn from_values(values: Array2<f64>, kind: DistanceKind) -> Self {
        assert!(values.is_square(), "distance matrix must be square");
        Self { values, kind }
    }
}

/// All pairwise distances between rows. Only the upper triangle is computed
/// (in parallel, one task per row) and mirrored.
pub fn pairwise(matrix: &RepresentedMatrix, kind: DistanceKind) -> Result<DistanceMatrix, MetricError> {
    let n = matrix.n_rows();
    if n < 2 {
        return Err(MetricError::TooFewRows(n));
    }
    let upper: Vec<Result<Vec<f64>, MetricError>> = par::map_range(n, |i| {
        let xi = matrix.row(i);
        ((i + 1)..n).map(|j| kind.distance(xi, matrix.row(j))).collect()
    });
    let mut values = Array2::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            let j = i + 1 + off;
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix { values, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        let d = euclidean(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(MetricError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn dtw_examples() {
        let x = [1.0, 3.0, -2.0, 0.5];
        assert_eq!(dtw(&x, &x, None).unwrap(), 0.0);
        // full DP table for ([0,0,1,2],[0,1,2]): path (0,0)(1,0)(2,1)(3,2) costs 0
        assert_eq!(dtw(&[0.0, 0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], None).unwrap(), 0.0);
        assert!(matches!(dtw(&[], &[1.0], None), Err(MetricError::EmptySeries)));
        assert!(matches!(
            dtw(&[0.0, 0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], Some(0)),
            Err(MetricError::InfeasibleWindow { window: 0, diff: 1 })
        ));
        assert_eq!(dtw(&[0.0, 0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], Some(1)).unwrap(), 0.0);
    }

    #[test]
    fn dtw_band_restricts_warping() {
        // an impulse shifted by 2 aligns freely but not within a band of 1
        let x = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let y = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(dtw(&x, &y, None).unwrap(), 0.0);
        assert!(dtw(&x, &y, Some(1)).unwrap() > 0.0);
    }

    #[test]
    fn sbd_examples() {
        let x = [1.0, 2.0, 0.5, -1.0];
        let (d, s) = sbd(&x, &x).unwrap();
        assert!(d.abs() < 1e-15);
        assert_eq!(s, 0);

        let (d, s) = sbd(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(d.abs() < 1e-15);
        assert_eq!(s, -1);
        assert_eq!(shift(&[0.0, 1.0, 0.0], s), [1.0, 0.0, 0.0]);

        // anti-correlation reaches 2 only when no other shift overlaps (d = 1);
        // longer series always have a less negative off-zero shift
        assert_eq!(sbd(&[3.0], &[-3.0]).unwrap(), (2.0, 0));
        let (d, _) = sbd(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap();
        assert!((d - (1.0 + 3.0 / 14.0)).abs() < 1e-12);
    }

    #[test]
    fn sbd_zero_vector() {
        assert!(matches!(sbd(&[0.0, 0.0], &[1.0, 2.0]), Err(MetricError::ZeroVector)));
        assert_eq!(sbd_lenient(&[0.0, 0.0], &[1.0, 2.0]), (1.0, 0));
    }

    #[test]
    fn sbd_tie_break_prefers_small_negative_shift() {
        // an impulse against a two-impulse series correlates equally at -1 and +1
        let (_, s) = sbd(&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s, -1);
    }

    #[test]
    fn pairwise_matches_elementwise() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..6).map(|j| ((i * 5 + j * 3) % 7) as f64 - 2.5).collect())
            .collect();
        let m = RepresentedMatrix::from_rows(&rows);
        let pw = pairwise(&m, DistanceKind::Euclidean).unwrap();
        for i in 0..5 {
            assert_eq!(pw.get(i, i), 0.0);
            for j in 0..5 {
                assert_eq!(pw.get(i, j), euclidean(&rows[i], &rows[j]).unwrap());
            }
        }
        let ps = pairwise(&m, DistanceKind::Sbd).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let direct = sbd(&rows[j], &rows[i]).unwrap().0;
                assert!((ps.get(i, j) - direct).abs() < 1e-9);
            }
        }
        assert!(matches!(
            pairwise(&RepresentedMatrix::from_rows(&rows[..1]), DistanceKind::Sbd),
            Err(MetricError::TooFewRows(1))
        ));
    }

    fn vec_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1..=max_len).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0..10.0f64, d),
                prop::collection::vec(-10.0..10.0f64, d),
            )
        })
    }

    proptest! {
        #[test]
        fn euclidean_and_dtw_are_symmetric_and_nonnegative((x, y) in vec_pair(16)) {
            let e1 = euclidean(&x, &y).unwrap();
            prop_assert!(e1 >= 0.0);
            prop_assert_eq!(e1, euclidean(&y, &x).unwrap());
            let d1 = dtw(&x, &y, None).unwrap();
            prop_assert!(d1 >= 0.0);
            prop_assert!((d1 - dtw(&y, &x, None).unwrap()).abs() < 1e-12);
            prop_assert!(d1 <= e1 + 1e-12);
        }

        #[test]
        fn euclidean_triangle_inequality(
            (x, y) in vec_pair(8),
            seed in prop::collection::vec(-10.0..10.0f64, 8),
        ) {
            let z = &seed[..x.len()];
            let xy = euclidean(&x, &y).unwrap();
            let yz = euclidean(&y, z).unwrap();
            let xz = euclidean(&x, z).unwrap();
            prop_assert!(xz <= xy + yz + 1e-9);
        }

        #[test]
        fn dtw_zero_window_is_euclidean((x, y) in vec_pair(16)) {
            let d = dtw(&x, &y, Some(0)).unwrap();
            prop_assert!((d - euclidean(&x, &y).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn sbd_scale_invariance((x, y) in vec_pair(16), a in 0.01..100.0f64, b in 0.01..100.0f64) {
            prop_assume!(dot(&x, &x) > 1e-6 && dot(&y, &y) > 1e-6);
            let (d0, _) = sbd(&x, &y).unwrap();
            let xa: Vec<f64> = x.iter().map(|v| v * a).collect();
            let ya: Vec<f64> = y.iter().map(|v| v * a).collect();
            let yb: Vec<f64> = y.iter().map(|v| v * b).collect();
            prop_assert!((sbd(&xa, &ya).unwrap().0 - d0).abs() < 1e-9);
            prop_assert!((sbd(&x, &yb).unwrap().0 - d0).abs() < 1e-9);
            prop_assert!((0.0..=2.0).contains(&d0));
        }
    }
}
