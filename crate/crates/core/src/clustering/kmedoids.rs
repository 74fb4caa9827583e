use ndarray::Array2;

use super::{fit_canonical, plus_plus_seeds, stream_rng, ClusterAssignment, ClusterConfig, RawFit};
use crate::error::ClusterError;
use crate::metrics::{pairwise, DistanceMatrix};
use crate::par;
use crate::representation::RepresentedMatrix;

/// Partitioning around medoids: greedy BUILD, then the best single
/// medoid/non-medoid SWAP while it lowers the total dissimilarity.
///
/// SWAP stops in local optima, so `n_init - 1` further runs start SWAP from
/// seeded k-means++ medoids; the lowest total wins, earliest run on ties.
///
/// Works with any [`DistanceKind`](crate::metrics::DistanceKind); the centers
/// are actual data rows.
pub fn kmedoids(matrix: &RepresentedMatrix, config: &ClusterConfig) -> Result<ClusterAssignment, ClusterError> {
    fit_canonical(matrix, config, |data| {
        let dm = pairwise(data, config.distance)?;
        let runs = par::map_range(config.n_init.max(1), |r| {
            let init = if r == 0 {
                build(&dm, config.k)
            } else {
                plus_plus_seeds(dm.n(), config.k, &mut stream_rng(config.seed, config.k, r), |a, b| {
                    dm.get(a, b)
                })
            };
            pam(&dm, init, config.max_iter)
        });
        let descent = runs.iter().map(|p| p.trace.clone()).collect();
        let pam = runs
            .into_iter()
            .reduce(|best, p| if p.total < best.total { p } else { best })
            .expect("at least one run");
        let mut centers = Array2::zeros((config.k, data.dim()));
        for (c, &m) in pam.medoids.iter().enumerate() {
            centers.row_mut(c).assign(&ndarray::ArrayView1::from(data.row(m)));
        }
        Ok(RawFit {
            clusters: pam.clusters,
            centers,
            inertia: pam.total,
            iterations: pam.swaps,
            converged: pam.converged,
            medoids: Some(pam.medoids),
            descent,
            dendrogram: None,
        })
    })
}

struct Pam {
    medoids: Vec<usize>,
    clusters: Vec<usize>,
    total: f64,
    swaps: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Nearest medoid per point (first medoid on ties, a medoid always owns
/// itself) and the summed distance.
fn assign(dm: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let n = dm.n();
    let mut clusters = vec![0; n];
    let mut total = 0.0;
    for (j, slot) in clusters.iter_mut().enumerate() {
        if let Some(pos) = medoids.iter().position(|&m| m == j) {
            *slot = pos;
            continue;
        }
        let (pos, d) = super::argmin(medoids.iter().map(|&m| dm.get(j, m)));
        *slot = pos;
        total += d;
    }
    (clusters, total)
}

fn build(dm: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = dm.n();
    let first = super::argmin((0..n).map(|i| (0..n).map(|j| dm.get(i, j)).sum::<f64>())).0;
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|j| dm.get(j, first)).collect();
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            let gain: f64 = (0..n).map(|j| (nearest[j] - dm.get(j, c)).max(0.0)).sum();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((c, gain));
            }
        }
        let (c, _) = best.expect("k <= n");
        medoids.push(c);
        for (j, v) in nearest.iter_mut().enumerate() {
            *v = v.min(dm.get(j, c));
        }
    }
    medoids
}

/// SWAP phase from the given distinct initial medoids.
fn pam(dm: &DistanceMatrix, mut medoids: Vec<usize>, max_iter: usize) -> Pam {
    let n = dm.n();
    let k = medoids.len();
    let (mut clusters, mut total) = assign(dm, &medoids);
    let mut trace = vec![total];
    let mut swaps = 0;
    let mut converged = false;

    while swaps < max_iter {
        // nearest and second-nearest medoid distance per point
        let near: Vec<(usize, f64, f64)> = (0..n)
            .map(|j| {
                let mut d1 = (usize::MAX, f64::INFINITY);
                let mut d2 = f64::INFINITY;
                for (pos, &m) in medoids.iter().enumerate() {
                    let d = dm.get(j, m);
                    if d < d1.1 {
                        d2 = d1.1;
                        d1 = (pos, d);
                    } else if d < d2 {
                        d2 = d;
                    }
                }
                (d1.0, d1.1, d2)
            })
            .collect();
        let candidates: Vec<usize> = (0..n).filter(|h| !medoids.contains(h)).collect();
        // best (delta, medoid position) per candidate
        let per_candidate = par::map_slice(&candidates, |&h| {
            let mut best = (f64::INFINITY, 0usize);
            for pos in 0..k {
                let delta: f64 = near
                    .iter()
                    .enumerate()
                    .map(|(j, &(p, d1, d2))| {
                        let dh = dm.get(j, h);
                        if p == pos {
                            dh.min(d2) - d1
                        } else {
                            (dh - d1).min(0.0)
                        }
                    })
                    .sum();
                if delta < best.0 {
                    best = (delta, pos);
                }
            }
            best
        });
        let mut best: Option<(f64, usize, usize)> = None;
        for (&h, &(delta, pos)) in candidates.iter().zip(&per_candidate) {
            if best.is_none_or(|(d, _, _)| delta < d) {
                best = Some((delta, pos, h));
            }
        }
        let Some((delta, pos, h)) = best else {
            converged = true;
            break;
        };
        if delta >= 0.0 {
            converged = true;
            break;
        }
        let mut trial = medoids.clone();
        trial[pos] = h;
        let (trial_clusters, trial_total) = assign(dm, &trial);
        // the delta is exact in real arithmetic; recheck to stay monotone
        if trial_total >= total {
            converged = true;
            break;
        }
        medoids = trial;
        clusters = trial_clusters;
        total = trial_total;
        trace.push(total);
        swaps += 1;
    }
    Pam {
        medoids,
        clusters,
        total,
        swaps,
        converged,
        trace,
    }
}
