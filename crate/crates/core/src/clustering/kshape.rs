use nalgebra::DMatrix;
use ndarray::Array2;

use super::kmeans::{best_run, Run};
use super::{
    argmin, fit_canonical, plus_plus_seeds, repair_empty, stream_rng, ClusterAssignment, ClusterConfig, REL_TOL,
};
use crate::error::ClusterError;
use crate::metrics::{sbd_lenient, shift};
use crate::par;
use crate::representation::{normalize_row, NormalizationKind, RepresentedMatrix, Transform};

/// k-shape: assignment by minimum SBD, centroids by shape extraction.
///
/// Rows that are not already z-normalized are z-normalized first (recorded as
/// a [`Transform::ShapeZNormalize`] step on the internal copy). Restarts use
/// k-means++ seeding under SBD; the lowest total SBD wins.
pub fn kshape(matrix: &RepresentedMatrix, config: &ClusterConfig) -> Result<ClusterAssignment, ClusterError> {
    let input = super::clustering_view(matrix, config);
    fit_canonical(&input, config, |data| {
        let runs = par::map_range(config.n_init.max(1), |r| refine(data, config, r));
        Ok(best_run(runs))
    })
}

pub(crate) fn z_normalized(matrix: &RepresentedMatrix) -> RepresentedMatrix {
    let (data, degenerate_rows) = crate::representation::normalize_rows(matrix, NormalizationKind::ZScore);
    matrix.with_data(data, Transform::ShapeZNormalize { degenerate_rows })
}

fn z_norm(v: &[f64]) -> Vec<f64> {
    normalize_row(v, NormalizationKind::ZScore).0
}

/// Shape extraction: align `members` to `reference` (skipped when the
/// reference is all zeros), then take the dominant eigenvector of `Qᵀ S Q`
/// with `S = Σ xxᵀ` over the aligned members and `Q = I - 11ᵀ/d`.
///
/// The sign is chosen so that most aligned members correlate positively with
/// the result, which is returned z-normalized.
pub fn shape_extraction(members: &[&[f64]], reference: &[f64]) -> Vec<f64> {
    let d = reference.len();
    if members.is_empty() {
        return reference.to_vec();
    }
    let has_reference = reference.iter().any(|&v| v != 0.0);
    let aligned: Vec<Vec<f64>> = members
        .iter()
        .map(|x| {
            if has_reference {
                let (_, s) = sbd_lenient(reference, x);
                shift(x, s)
            } else {
                x.to_vec()
            }
        })
        .collect();

    let x = DMatrix::from_fn(aligned.len(), d, |i, j| aligned[i][j]);
    let s = x.transpose() * &x;
    let q = DMatrix::<f64>::identity(d, d) - DMatrix::from_element(d, d, 1.0 / d as f64);
    let m = q.transpose() * s * &q;
    let eig = m.symmetric_eigen();
    let top = argmin(eig.eigenvalues.iter().map(|v| -v)).0;
    let mut centroid: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();

    let dots: Vec<f64> = aligned
        .iter()
        .map(|a| a.iter().zip(&centroid).map(|(p, q)| p * q).sum())
        .collect();
    let positive = dots.iter().filter(|&&v| v > 0.0).count();
    let negative = dots.iter().filter(|&&v| v < 0.0).count();
    if negative > positive || (negative == positive && dots.iter().sum::<f64>() < 0.0) {
        centroid.iter_mut().for_each(|v| *v = -*v);
    }
    z_norm(&centroid)
}

fn assign(data: &RepresentedMatrix, centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let best = par::map_range(data.n_rows(), |i| {
        argmin(centroids.iter().map(|c| sbd_lenient(c, data.row(i)).0))
    });
    best.into_iter().unzip()
}

fn refine(data: &RepresentedMatrix, config: &ClusterConfig, restart: usize) -> Run {
    let k = config.k;
    let n = data.n_rows();
    let mut rng = stream_rng(config.seed, k, restart);
    let seeds = plus_plus_seeds(n, k, &mut rng, |a, b| sbd_lenient(data.row(a), data.row(b)).0);
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&s| data.row(s).to_vec()).collect();

    let (mut clusters, mut cost) = assign(data, &centroids);
    repair(data, &mut clusters, &mut cost, &mut centroids, k);
    let mut inertia: f64 = cost.iter().sum();
    let mut trace = vec![inertia];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let updated = par::map_range(k, |c| {
            let members: Vec<&[f64]> = (0..n).filter(|&i| clusters[i] == c).map(|i| data.row(i)).collect();
            shape_extraction(&members, &centroids[c])
        });
        centroids = updated;
        let (mut next, mut next_cost) = assign(data, &centroids);
        repair(data, &mut next, &mut next_cost, &mut centroids, k);
        let next_inertia: f64 = next_cost.iter().sum();
        trace.push(next_inertia);
        let unchanged = next == clusters;
        let small_step = (inertia - next_inertia).abs() <= REL_TOL * inertia.abs();
        clusters = next;
        inertia = next_inertia;
        if unchanged || small_step {
            converged = true;
            break;
        }
    }
    let mut centers = Array2::zeros((k, data.dim()));
    for (c, v) in centroids.iter().enumerate() {
        centers.row_mut(c).assign(&ndarray::ArrayView1::from(v.as_slice()));
    }
    Run {
        clusters,
        centers,
        inertia,
        iterations,
        converged,
        trace,
    }
}

fn repair(data: &RepresentedMatrix, clusters: &mut [usize], cost: &mut [f64], centroids: &mut [Vec<f64>], k: usize) {
    for (i, c) in repair_empty(clusters, cost, k) {
        centroids[c] = data.row(i).to_vec();
        cost[i] = 0.0;
    }
}
