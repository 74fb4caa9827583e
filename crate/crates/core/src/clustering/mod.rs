//! Partitioning algorithms and the k-sweep driver.
//!
//! Every algorithm runs on the input rows sorted by label, so a permutation of
//! the input rows cannot change the result, and cluster ids are canonicalized:
//! cluster 0 holds the lexicographically smallest label and ids increase by
//! first appearance in label order.

mod hierarchical;
mod kmeans;
mod kmedoids;
mod kshape;
mod sweep;

use std::borrow::Cow;
use std::collections::BTreeMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ClusterError;
use crate::metrics::DistanceKind;
use crate::representation::RepresentedMatrix;

pub use hierarchical::{hierarchical, Merge};
pub use kmeans::kmeans;
pub use kmedoids::kmedoids;
pub use kshape::{kshape, shape_extraction};
pub use sweep::{elbow, sweep_k, KSelection, KSweepResult, SweepEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Kmedoids,
    Hierarchical,
    Kshape,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Kmedoids => "kmedoids",
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::Kshape => "kshape",
        }
    }

    /// The distance used when none is configured.
    pub fn default_distance(&self) -> DistanceKind {
        match self {
            Algorithm::Kshape => DistanceKind::Sbd,
            _ => DistanceKind::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Ward,
    Complete,
    Average,
    Single,
}

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_N_INIT: usize = 10;
/// Secondary stop: relative objective change between iterations.
pub const REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub distance: DistanceKind,
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
    pub linkage: Linkage,
}

impl ClusterConfig {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        Self {
            algorithm,
            k,
            distance: algorithm.default_distance(),
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            n_init: DEFAULT_N_INIT,
            linkage: Linkage::default(),
        }
    }

    pub fn with_distance(mut self, distance: DistanceKind) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_linkage(mut self, linkage: Linkage) -> Self {
        self.linkage = linkage;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Algorithm/distance compatibility, independent of the data.
    pub fn check_compatibility(&self) -> Result<(), ClusterError> {
        match (self.algorithm, self.distance) {
            (Algorithm::Kmeans, DistanceKind::Euclidean) => {}
            (Algorithm::Kmeans, d) => {
                return Err(ClusterError::UnsupportedDistance {
                    algorithm: "kmeans",
                    distance: d.name(),
                })
            }
            (Algorithm::Kshape, DistanceKind::Sbd) => {}
            (Algorithm::Kshape, d) => {
                return Err(ClusterError::UnsupportedDistance {
                    algorithm: "kshape",
                    distance: d.name(),
                })
            }
            (Algorithm::Hierarchical, d) if self.linkage == Linkage::Ward && d != DistanceKind::Euclidean => {
                return Err(ClusterError::WardRequiresEuclidean)
            }
            _ => {}
        }
        Ok(())
    }

    fn check(&self, n: usize) -> Result<(), ClusterError> {
        if self.k == 0 {
            return Err(ClusterError::InvalidK(0));
        }
        if self.k > n {
            return Err(ClusterError::KTooLarge { k: self.k, n });
        }
        self.check_compatibility()
    }
}

/// Result of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<String>,
    clusters: Vec<usize>,
    k: usize,
    /// k×m centers: centroids (k-means, k-shape), medoid rows (k-medoids) or
    /// cluster means (hierarchical).
    pub centers: Array2<f64>,
    /// Total within-cluster dissimilarity: squared euclidean to the centroid for
    /// k-means and hierarchical, distance to the medoid for k-medoids, SBD to
    /// the centroid for k-shape.
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Medoid rows, as indices into the input row order.
    pub medoids: Option<Vec<usize>>,
    /// Objective value after every iteration, one trace per restart.
    pub descent: Vec<Vec<f64>>,
    /// Merge sequence for hierarchical runs, in input row indices.
    pub dendrogram: Option<Vec<Merge>>,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Labels in input row order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Cluster id of every input row.
    pub fn clusters(&self) -> &[usize] {
        &self.clusters
    }

    pub fn labels_to_cluster(&self) -> BTreeMap<String, usize> {
        self.labels.iter().cloned().zip(self.clusters.iter().copied()).collect()
    }

    /// Member labels of every cluster, each list sorted.
    pub fn cluster_members(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (l, &c) in self.labels.iter().zip(&self.clusters) {
            out[c].push(l.clone());
        }
        for v in &mut out {
            v.sort();
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.clusters {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Output of an algorithm run on label-sorted rows, before relabeling.
pub(crate) struct RawFit {
    pub clusters: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub medoids: Option<Vec<usize>>,
    pub descent: Vec<Vec<f64>>,
    pub dendrogram: Option<Vec<Merge>>,
}

/// Indices that sort the rows by label.
fn label_order(matrix: &RepresentedMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    order.sort_by(|&a, &b| matrix.labels()[a].cmp(&matrix.labels()[b]).then(a.cmp(&b)));
    order
}

/// Runs `algo` on label-sorted rows and maps the result back to the input row
/// order with canonical cluster ids.
pub(crate) fn fit_canonical<F>(
    matrix: &RepresentedMatrix,
    config: &ClusterConfig,
    algo: F,
) -> Result<ClusterAssignment, ClusterError>
where
    F: FnOnce(&RepresentedMatrix) -> Result<RawFit, ClusterError>,
{
    config.check(matrix.n_rows())?;
    let order = label_order(matrix);
    let sorted = matrix.permuted(&order);
    let raw = algo(&sorted)?;
    let k = config.k;

    // sorted rows are in label order, so first appearance defines the ids
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for &c in &raw.clusters {
        if remap[c] == usize::MAX {
            remap[c] = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, k, "every cluster must be non-empty");
    let mut centers = Array2::zeros(raw.centers.dim());
    for (old, &new) in remap.iter().enumerate() {
        if new != usize::MAX {
            centers.row_mut(new).assign(&raw.centers.row(old));
        }
    }

    let n = matrix.n_rows();
    let mut clusters = vec![0; n];
    for (sorted_idx, &orig) in order.iter().enumerate() {
        clusters[orig] = remap[raw.clusters[sorted_idx]];
    }
    let medoids = raw.medoids.map(|meds| {
        let mut by_cluster = vec![0; k];
        for (old, &m) in meds.iter().enumerate() {
            by_cluster[remap[old]] = order[m];
        }
        by_cluster
    });
    let dendrogram = raw.dendrogram.map(|merges| {
        merges
            .into_iter()
            .map(|m| Merge {
                a: order[m.a],
                b: order[m.b],
                ..m
            })
            .collect()
    });

    Ok(ClusterAssignment {
        labels: matrix.labels().to_vec(),
        clusters,
        k,
        centers,
        inertia: raw.inertia,
        iterations: raw.iterations,
        converged: raw.converged,
        medoids,
        descent: raw.descent,
        dendrogram,
    })
}

/// The rows an algorithm actually clusters: k-shape works on z-normalized
/// rows, everything else on the matrix as given.
pub fn clustering_view<'a>(matrix: &'a RepresentedMatrix, config: &ClusterConfig) -> Cow<'a, RepresentedMatrix> {
    if config.algorithm == Algorithm::Kshape && !matrix.is_z_normalized() {
        Cow::Owned(kshape::z_normalized(matrix))
    } else {
        Cow::Borrowed(matrix)
    }
}

/// Dispatches on `config.algorithm`.
pub fn fit(matrix: &RepresentedMatrix, config: &ClusterConfig) -> Result<ClusterAssignment, ClusterError> {
    match config.algorithm {
        Algorithm::Kmeans => kmeans(matrix, config),
        Algorithm::Kmedoids => kmedoids(matrix, config),
        Algorithm::Hierarchical => hierarchical(matrix, config),
        Algorithm::Kshape => kshape(matrix, config),
    }
}

/// Private RNG stream for one (seed, k, restart) triple.
pub(crate) fn stream_rng(seed: u64, k: usize, restart: usize) -> ChaCha8Rng {
    let mut z =
        seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (restart as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// k-means++ seeding over an arbitrary dissimilarity: the first seed is
/// uniform, each next one is drawn with probability proportional to the
/// squared distance to the nearest chosen seed.
pub(crate) fn plus_plus_seeds<R, D>(n: usize, k: usize, rng: &mut R, dist: D) -> Vec<usize>
where
    R: rand::Rng,
    D: Fn(usize, usize) -> f64,
{
    let mut seeds = Vec::with_capacity(k);
    seeds.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(seeds[0], i).powi(2)).collect();
    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    if target < w {
                        chosen = Some(i);
                        break;
                    }
                    target -= w;
                }
            }
            // rounding can leave target just above the last weight
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // all remaining points coincide with a seed
            (0..n).find(|i| !seeds.contains(i)).expect("k <= n")
        };
        seeds.push(pick);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(dist(pick, i).powi(2));
        }
    }
    seeds
}

/// Index of the smallest value, first one on ties.
#[inline]
pub(crate) fn argmin(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Moves points into empty clusters: each empty cluster takes the point
/// farthest from its own center among clusters with more than one member.
/// Returns the (point, cluster) moves made.
pub(crate) fn repair_empty(clusters: &mut [usize], cost: &[f64], k: usize) -> Vec<(usize, usize)> {
    let mut sizes = vec![0usize; k];
    for &c in clusters.iter() {
        sizes[c] += 1;
    }
    let mut moved = vec![false; clusters.len()];
    let mut moves = Vec::new();
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in clusters.iter().enumerate() {
            if sizes[c] > 1 && !moved[i] && best.is_none_or(|(_, d)| cost[i] > d) {
                best = Some((i, cost[i]));
            }
        }
        let (i, _) = best.expect("k <= n leaves a cluster with spare members");
        sizes[clusters[i]] -= 1;
        clusters[i] = empty;
        sizes[empty] = 1;
        moved[i] = true;
        moves.push((i, empty));
    }
    moves
}
