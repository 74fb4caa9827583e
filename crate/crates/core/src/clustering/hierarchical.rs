use ndarray::Array2;
use serde::Serialize;

use super::{fit_canonical, ClusterAssignment, ClusterConfig, Linkage, RawFit};
use crate::error::ClusterError;
use crate::metrics::{pairwise, sq_dist, DistanceKind};
use crate::representation::RepresentedMatrix;

/// One agglomeration step: cluster `b` is merged into cluster `a` (`a < b`),
/// where a cluster is identified by the lowest-indexed slot it occupies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Linkage distance at which the merge happened.
    pub height: f64,
    /// Size of the merged cluster.
    pub size: usize,
}

/// Agglomerative clustering with Lance-Williams updates, cut at `k` clusters.
///
/// At every step the closest pair of active clusters is merged, ties going to
/// the smallest `(a, b)` slot pair; the merged cluster keeps slot `a`. Ward
/// works on squared euclidean distances and reports heights on the euclidean
/// scale. Centers are the member means and the inertia is the summed squared
/// euclidean distance to them.
pub fn hierarchical(matrix: &RepresentedMatrix, config: &ClusterConfig) -> Result<ClusterAssignment, ClusterError> {
    fit_canonical(matrix, config, |data| {
        let merges = agglomerate(data, config.distance, config.linkage, data.n_rows() - config.k)?;
        let clusters = flat_clusters(data.n_rows(), &merges);
        let (centers, inertia) = means_and_sse(data, &clusters, config.k);
        Ok(RawFit {
            clusters,
            centers,
            inertia,
            iterations: merges.len(),
            converged: true,
            medoids: None,
            descent: Vec::new(),
            dendrogram: Some(merges),
        })
    })
}

/// Performs `steps` merges and returns them in order.
pub(crate) fn agglomerate(
    data: &RepresentedMatrix,
    distance: DistanceKind,
    linkage: Linkage,
    steps: usize,
) -> Result<Vec<Merge>, ClusterError> {
    let n = data.n_rows();
    if linkage == Linkage::Ward && distance != DistanceKind::Euclidean {
        return Err(ClusterError::WardRequiresEuclidean);
    }
    if steps == 0 {
        return Ok(Vec::new());
    }
    let mut d = pairwise(data, distance)?.values().clone();
    if linkage == Linkage::Ward {
        d.mapv_inplace(|v| v * v);
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    // nearest neighbour among active slots with a larger index
    let mut nn = vec![(usize::MAX, f64::INFINITY); n];
    let row_nn = |d: &Array2<f64>, active: &[bool], i: usize| {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in (i + 1)..n {
            if active[j] && d[[i, j]] < best.1 {
                best = (j, d[[i, j]]);
            }
        }
        best
    };
    for (i, slot) in nn.iter_mut().enumerate() {
        *slot = row_nn(&d, &active, i);
    }

    let mut merges = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && nn[i].0 != usize::MAX && (a == usize::MAX || nn[i].1 < nn[a].1) {
                a = i;
            }
        }
        let (b, dab) = nn[a];
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for l in 0..n {
            if !active[l] || l == a || l == b {
                continue;
            }
            let (dal, dbl) = (d[[a, l]], d[[b, l]]);
            let nl = size[l] as f64;
            let v = match linkage {
                Linkage::Single => dal.min(dbl),
                Linkage::Complete => dal.max(dbl),
                Linkage::Average => (na * dal + nb * dbl) / (na + nb),
                Linkage::Ward => ((na + nl) * dal + (nb + nl) * dbl - nl * dab) / (na + nb + nl),
            };
            d[[a, l]] = v;
            d[[l, a]] = v;
        }
        active[b] = false;
        size[a] += size[b];
        merges.push(Merge {
            a,
            b,
            height: if linkage == Linkage::Ward {
                dab.max(0.0).sqrt()
            } else {
                dab
            },
            size: size[a],
        });

        nn[a] = row_nn(&d, &active, a);
        nn[b] = (usize::MAX, f64::INFINITY);
        for l in 0..a {
            if !active[l] {
                continue;
            }
            if nn[l].0 == a || nn[l].0 == b {
                nn[l] = row_nn(&d, &active, l);
            } else if d[[l, a]] < nn[l].1 || (d[[l, a]] == nn[l].1 && a < nn[l].0) {
                nn[l] = (a, d[[l, a]]);
            }
        }
        for l in (a + 1)..b {
            if active[l] && nn[l].0 == b {
                nn[l] = row_nn(&d, &active, l);
            }
        }
    }
    Ok(merges)
}

/// Flat labels after applying `merges` to `n` singletons, numbered by
/// surviving slot order.
pub(crate) fn flat_clusters(n: usize, merges: &[Merge]) -> Vec<usize> {
    let mut owner: Vec<usize> = (0..n).collect();
    for m in merges {
        for o in owner.iter_mut() {
            if *o == m.b {
                *o = m.a;
            }
        }
    }
    let mut slots: Vec<usize> = owner.clone();
    slots.sort_unstable();
    slots.dedup();
    owner
        .iter()
        .map(|o| slots.binary_search(o).expect("owner is a surviving slot"))
        .collect()
}

pub(crate) fn means_and_sse(data: &RepresentedMatrix, clusters: &[usize], k: usize) -> (Array2<f64>, f64) {
    let mut centers = Array2::<f64>::zeros((k, data.dim()));
    let mut counts = vec![0usize; k];
    for (i, &c) in clusters.iter().enumerate() {
        counts[c] += 1;
        for (dst, src) in centers.row_mut(c).iter_mut().zip(data.row(i)) {
            *dst += src;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            centers.row_mut(c).mapv_inplace(|v| v / count as f64);
        }
    }
    let sse = clusters
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(data.row(i), centers.row(c).as_slice().unwrap()))
        .sum();
    (centers, sse)
}
