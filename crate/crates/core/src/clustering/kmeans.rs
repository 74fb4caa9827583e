use ndarray::Array2;

use super::{
    argmin, fit_canonical, plus_plus_seeds, repair_empty, stream_rng, ClusterAssignment, ClusterConfig, RawFit, REL_TOL,
};
use crate::error::ClusterError;
use crate::metrics::sq_dist;
use crate::par;
use crate::representation::RepresentedMatrix;

/// Lloyd's k-means from k-means++ seeding, best of `n_init` restarts by
/// inertia (sum of squared euclidean distances to the centroids).
pub fn kmeans(matrix: &RepresentedMatrix, config: &ClusterConfig) -> Result<ClusterAssignment, ClusterError> {
    fit_canonical(matrix, config, |data| {
        let runs = par::map_range(config.n_init.max(1), |r| lloyd(data, config, r));
        Ok(best_run(runs))
    })
}

pub(super) struct Run {
    pub clusters: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Lowest inertia wins, earliest restart on ties. All traces are kept.
pub(super) fn best_run(runs: Vec<Run>) -> RawFit {
    let descent: Vec<Vec<f64>> = runs.iter().map(|r| r.trace.clone()).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    RawFit {
        clusters: best.clusters,
        centers: best.centers,
        inertia: best.inertia,
        iterations: best.iterations,
        converged: best.converged,
        medoids: None,
        descent,
        dendrogram: None,
    }
}

fn assign(data: &RepresentedMatrix, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = centers.nrows();
    let best = par::map_range(data.n_rows(), |i| {
        let x = data.row(i);
        argmin((0..k).map(|c| sq_dist(x, centers.row(c).as_slice().unwrap())))
    });
    best.into_iter().unzip()
}

fn update_centers(data: &RepresentedMatrix, clusters: &[usize], k: usize) -> Array2<f64> {
    let mut centers = Array2::<f64>::zeros((k, data.dim()));
    let mut counts = vec![0usize; k];
    for (i, &c) in clusters.iter().enumerate() {
        counts[c] += 1;
        for (dst, src) in centers.row_mut(c).iter_mut().zip(data.row(i)) {
            *dst += src;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        centers.row_mut(c).mapv_inplace(|v| v / count as f64);
    }
    centers
}

/// Assign, repair empties; the trace records the inertia of each assignment
/// against the centers it was made for, which never increases.
fn lloyd(data: &RepresentedMatrix, config: &ClusterConfig, restart: usize) -> Run {
    let k = config.k;
    let mut rng = stream_rng(config.seed, k, restart);
    let seeds = plus_plus_seeds(data.n_rows(), k, &mut rng, |a, b| {
        sq_dist(data.row(a), data.row(b)).sqrt()
    });
    let mut centers = Array2::zeros((k, data.dim()));
    for (c, &s) in seeds.iter().enumerate() {
        centers.row_mut(c).assign(&ndarray::ArrayView1::from(data.row(s)));
    }

    let (mut clusters, mut cost) = assign(data, &centers);
    repair(data, &mut clusters, &mut cost, &mut centers, k);
    let mut inertia: f64 = cost.iter().sum();
    let mut trace = vec![inertia];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        centers = update_centers(data, &clusters, k);
        let (mut next, mut next_cost) = assign(data, &centers);
        repair(data, &mut next, &mut next_cost, &mut centers, k);
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
    Run {
        clusters,
        centers,
        inertia,
        iterations,
        converged,
        trace,
    }
}

fn repair(data: &RepresentedMatrix, clusters: &mut [usize], cost: &mut [f64], centers: &mut Array2<f64>, k: usize) {
    for (i, c) in repair_empty(clusters, cost, k) {
        centers.row_mut(c).assign(&ndarray::ArrayView1::from(data.row(i)));
        cost[i] = 0.0;
    }
}
