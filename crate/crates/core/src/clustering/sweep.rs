use serde::{Deserialize, Serialize};

use super::{fit, ClusterAssignment, ClusterConfig};
use crate::error::ClusterError;
use crate::metrics::pairwise;
use crate::par;
use crate::representation::RepresentedMatrix;
use crate::validity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KSelection {
    #[default]
    Elbow,
    BestSilhouette,
}

/// Scores of one k. Indexes are `None` where undefined (e.g. silhouette at k = n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSweepResult {
    /// Sorted by k ascending.
    pub per_k: Vec<SweepEntry>,
    pub suggested_k: usize,
    pub method: KSelection,
    pub elbow_k: usize,
    pub best_silhouette_k: Option<usize>,
}

/// The k whose (k, inertia) point lies farthest from the chord joining the
/// first and last points. Smallest k wins ties; fewer than three points
/// return the first k.
pub fn elbow(points: &[(usize, f64)]) -> usize {
    assert!(!points.is_empty(), "elbow of an empty curve");
    let (x0, y0) = (points[0].0 as f64, points[0].1);
    let (x1, y1) = {
        let last = points[points.len() - 1];
        (last.0 as f64, last.1)
    };
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = (dx * dx + dy * dy).sqrt();
    if norm == 0.0 {
        return points[0].0;
    }
    let mut best = (points[0].0, 0.0);
    for &(k, y) in points {
        let dist = (dx * (y0 - y) - (x0 - k as f64) * dy).abs() / norm;
        if dist > best.1 {
            best = (k, dist);
        }
    }
    best.0
}

/// Runs the configured algorithm for every k in `[k_min, k_max]` (in parallel)
/// and scores each partition. Returns the sweep summary and the assignments in
/// k order.
pub fn sweep_k(
    matrix: &RepresentedMatrix,
    config: &ClusterConfig,
    k_min: usize,
    k_max: usize,
    method: KSelection,
) -> Result<(KSweepResult, Vec<ClusterAssignment>), ClusterError> {
    let n = matrix.n_rows();
    if k_min < 2 || k_min > k_max || k_max > n {
        return Err(ClusterError::InvalidRange {
            min: k_min,
            max: k_max,
            n,
        });
    }
    config.check_compatibility()?;
    let view = super::clustering_view(matrix, config);
    let dm = pairwise(&view, config.distance)?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let runs = par::map_slice(&ks, |&k| -> Result<_, ClusterError> {
        let assignment = fit(matrix, &config.clone().with_k(k))?;
        let entry = SweepEntry {
            k,
            inertia: assignment.inertia,
            silhouette: validity::silhouette_from_distances(&dm, assignment.clusters()).ok(),
            davies_bouldin: validity::davies_bouldin(&view, &assignment).ok(),
            calinski_harabasz: validity::calinski_harabasz(&view, &assignment).ok(),
        };
        Ok((entry, assignment))
    });
    let (per_k, assignments): (Vec<_>, Vec<_>) = runs.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();

    let curve: Vec<(usize, f64)> = per_k.iter().map(|e| (e.k, e.inertia)).collect();
    let elbow_k = elbow(&curve);
    let best_silhouette_k = per_k
        .iter()
        .filter_map(|e| e.silhouette.map(|s| (e.k, s)))
        .fold(None, |best: Option<(usize, f64)>, (k, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((k, s)),
        })
        .map(|(k, _)| k);
    let suggested_k = match method {
        KSelection::Elbow => elbow_k,
        KSelection::BestSilhouette => best_silhouette_k.unwrap_or(elbow_k),
    };
    Ok((
        KSweepResult {
            per_k,
            suggested_k,
            method,
            elbow_k,
            best_silhouette_k,
        },
        assignments,
    ))
}
