//! Cluster validity indexes and partition agreement.
//!
//! Silhouette uses the clustering's own dissimilarity. Davies-Bouldin and
//! Caliński-Harabasz are centroid-based and always work in the euclidean
//! space of the represented matrix, with centroids taken as member means.

use std::time::Duration;

use ndarray::Array2;
use serde::Serialize;

use crate::clustering::{clustering_view, ClusterAssignment, ClusterConfig};
use crate::error::ValidityError;
use crate::metrics::{pairwise, sq_dist, DistanceKind, DistanceMatrix};
use crate::par;
use crate::representation::RepresentedMatrix;

/// Number of distinct cluster ids, assuming ids are `0..k`.
fn n_clusters(clusters: &[usize]) -> usize {
    clusters.iter().max().map_or(0, |m| m + 1)
}

/// Per-point silhouette values from a precomputed distance matrix.
///
/// Singleton clusters score 0. Requires `2 <= k <= n - 1`.
pub fn silhouette_samples(dm: &DistanceMatrix, clusters: &[usize]) -> Result<Vec<f64>, ValidityError> {
    let n = clusters.len();
    if dm.n() != n {
        return Err(ValidityError::ShapeMismatch {
            assigned: n,
            rows: dm.n(),
        });
    }
    let k = n_clusters(clusters);
    if k < 2 || k + 1 > n {
        return Err(ValidityError::DegenerateK { k, n });
    }
    let mut sizes = vec![0usize; k];
    for &c in clusters {
        sizes[c] += 1;
    }
    Ok(par::map_range(n, |i| {
        let own = clusters[i];
        if sizes[own] <= 1 {
            return 0.0;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[clusters[j]] += dm.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            (b - a) / m
        } else {
            0.0
        }
    }))
}

pub fn silhouette_from_distances(dm: &DistanceMatrix, clusters: &[usize]) -> Result<f64, ValidityError> {
    let s = silhouette_samples(dm, clusters)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Mean silhouette under `kind`.
pub fn silhouette(
    matrix: &RepresentedMatrix,
    assignment: &ClusterAssignment,
    kind: DistanceKind,
) -> Result<f64, ValidityError> {
    check_shape(matrix, assignment)?;
    let dm = pairwise(matrix, kind)?;
    silhouette_from_distances(&dm, assignment.clusters())
}

fn check_shape(matrix: &RepresentedMatrix, assignment: &ClusterAssignment) -> Result<(), ValidityError> {
    if matrix.n_rows() != assignment.clusters().len() {
        return Err(ValidityError::ShapeMismatch {
            assigned: assignment.clusters().len(),
            rows: matrix.n_rows(),
        });
    }
    Ok(())
}

fn member_means(matrix: &RepresentedMatrix, clusters: &[usize], k: usize) -> (Array2<f64>, Vec<usize>) {
    let mut means = Array2::<f64>::zeros((k, matrix.dim()));
    let mut sizes = vec![0usize; k];
    for (i, &c) in clusters.iter().enumerate() {
        sizes[c] += 1;
        for (dst, src) in means.row_mut(c).iter_mut().zip(matrix.row(i)) {
            *dst += src;
        }
    }
    for (c, &s) in sizes.iter().enumerate() {
        if s > 0 {
            means.row_mut(c).mapv_inplace(|v| v / s as f64);
        }
    }
    (means, sizes)
}

/// Davies-Bouldin index over cluster labels in row order.
pub fn davies_bouldin_labels(matrix: &RepresentedMatrix, clusters: &[usize]) -> Result<f64, ValidityError> {
    let n = matrix.n_rows();
    let k = n_clusters(clusters);
    if k < 2 {
        return Err(ValidityError::DegenerateK { k, n });
    }
    let (means, sizes) = member_means(matrix, clusters, k);
    let mut scatter = vec![0.0; k];
    for (i, &c) in clusters.iter().enumerate() {
        scatter[c] += sq_dist(matrix.row(i), means.row(c).as_slice().unwrap()).sqrt();
    }
    for (s, &size) in scatter.iter_mut().zip(&sizes) {
        *s /= size.max(1) as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = sq_dist(means.row(i).as_slice().unwrap(), means.row(j).as_slice().unwrap()).sqrt();
            if sep == 0.0 {
                return Err(ValidityError::CoincidentCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

pub fn davies_bouldin(matrix: &RepresentedMatrix, assignment: &ClusterAssignment) -> Result<f64, ValidityError> {
    check_shape(matrix, assignment)?;
    davies_bouldin_labels(matrix, assignment.clusters())
}

/// Caliński-Harabasz index over cluster labels in row order. Returns
/// `+inf` when the within-cluster scatter is zero.
pub fn calinski_harabasz_labels(matrix: &RepresentedMatrix, clusters: &[usize]) -> Result<f64, ValidityError> {
    let n = matrix.n_rows();
    let k = n_clusters(clusters);
    if k < 2 || k + 1 > n {
        return Err(ValidityError::DegenerateK { k, n });
    }
    let (means, sizes) = member_means(matrix, clusters, k);
    let overall: Vec<f64> = (0..matrix.dim())
        .map(|j| matrix.data().column(j).sum() / n as f64)
        .collect();
    let between: f64 = (0..k)
        .map(|c| sizes[c] as f64 * sq_dist(means.row(c).as_slice().unwrap(), &overall))
        .sum();
    let within: f64 = clusters
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(matrix.row(i), means.row(c).as_slice().unwrap()))
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

pub fn calinski_harabasz(matrix: &RepresentedMatrix, assignment: &ClusterAssignment) -> Result<f64, ValidityError> {
    check_shape(matrix, assignment)?;
    calinski_harabasz_labels(matrix, assignment.clusters())
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    let ka = n_clusters(a);
    let kb = n_clusters(b);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let pairs = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| pairs(v)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        // both partitions trivial and identical in structure
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Conditions worth surfacing next to the scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityFlag {
    /// DB and CH were computed in euclidean space while clustering used another distance.
    CentroidIndexesEuclidean,
    /// Within-cluster scatter is zero; CH is reported as infinite.
    ZeroWithinScatter,
    /// An index is undefined for this k and n.
    Undefined,
}

/// Scores of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub inertia: f64,
    #[serde(skip)]
    pub elapsed: Duration,
    pub flags: Vec<ValidityFlag>,
}

/// Computes all three indexes for an assignment produced by `config`.
///
/// Undefined indexes (k outside their range, coincident centroids) are left as
/// `None` with [`ValidityFlag::Undefined`]; an infinite CH is kept as
/// `Some(inf)` with [`ValidityFlag::ZeroWithinScatter`].
pub fn evaluate(
    matrix: &RepresentedMatrix,
    assignment: &ClusterAssignment,
    config: &ClusterConfig,
    elapsed: Duration,
) -> Result<ValidityReport, ValidityError> {
    let view = clustering_view(matrix, config);
    check_shape(&view, assignment)?;
    let mut flags = Vec::new();
    let undefined = |e: &ValidityError| {
        matches!(
            e,
            ValidityError::DegenerateK { .. } | ValidityError::CoincidentCentroids(..)
        )
    };
    let mut keep = |r: Result<f64, ValidityError>| -> Result<Option<f64>, ValidityError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if undefined(&e) => {
                if !flags.contains(&ValidityFlag::Undefined) {
                    flags.push(ValidityFlag::Undefined);
                }
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let silhouette = keep(silhouette(&view, assignment, config.distance))?;
    let davies_bouldin = keep(davies_bouldin(&view, assignment))?;
    let calinski_harabasz = keep(calinski_harabasz(&view, assignment))?;
    if config.distance != DistanceKind::Euclidean {
        flags.push(ValidityFlag::CentroidIndexesEuclidean);
    }
    if calinski_harabasz.is_some_and(f64::is_infinite) {
        flags.push(ValidityFlag::ZeroWithinScatter);
    }
    Ok(ValidityReport {
        silhouette,
        davies_bouldin,
        calinski_harabasz,
        inertia: assignment.inertia,
        elapsed,
        flags,
    })
}
