//! The labels and scores JSON artifacts.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::clustering::{ClusterAssignment, KSelection, SweepEntry};
use crate::dataset::DroppedSeries;
use crate::validity::{ValidityFlag, ValidityReport};

/// `{"run_id", "clusters": {id: [labels]}, "assignment": {label: id}}`.
pub fn labels_value(run_id: &str, assignment: &ClusterAssignment) -> Value {
    let clusters: BTreeMap<String, Vec<String>> = assignment
        .cluster_members()
        .into_iter()
        .enumerate()
        .map(|(c, members)| (c.to_string(), members))
        .collect();
    json!({
        "run_id": run_id,
        "clusters": clusters,
        "assignment": assignment.labels_to_cluster(),
    })
}

/// Sweep part of the scores file.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub per_k: Vec<SweepEntry>,
    pub suggested_k: usize,
    pub selection_method: KSelection,
    pub elbow_k: usize,
    pub best_silhouette_k: Option<usize>,
}

/// Contents of the scores file.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreSheet {
    pub run_id: String,
    pub k: usize,
    /// `null` where the index is undefined; an infinite Caliński-Harabasz is
    /// written as `null` with the `zero_within_scatter` flag.
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
    pub flags: Vec<ValidityFlag>,
    pub dropped: Vec<DroppedSeries>,
    pub explained_variance_ratio: Option<Vec<f64>>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
    pub config: Value,
}

impl ScoreSheet {
    pub fn new(run_id: &str, assignment: &ClusterAssignment, report: &ValidityReport, config: Value) -> Self {
        Self {
            run_id: run_id.to_string(),
            k: assignment.k(),
            silhouette: report.silhouette,
            davies_bouldin: report.davies_bouldin,
            calinski_harabasz: report.calinski_harabasz,
            inertia: report.inertia,
            iterations: assignment.iterations,
            converged: assignment.converged,
            elapsed_seconds: None,
            flags: report.flags.clone(),
            dropped: Vec::new(),
            explained_variance_ratio: None,
            sweep: None,
            config,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("score sheet serializes")
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_bytes(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("json value serializes");
    out.push(b'\n');
    out
}
