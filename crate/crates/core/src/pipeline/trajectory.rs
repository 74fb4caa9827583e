//! Cluster trajectories of labels across an ordered sequence of runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

/// Marker for a label absent from a run.
pub const ABSENT: &str = "x";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    /// Code of every label seen in any run.
    pub codes: BTreeMap<String, String>,
    /// Number of labels per code.
    pub frequencies: BTreeMap<String, usize>,
    /// Separator between positions; empty unless some cluster id has more
    /// than one digit, in which case `.` keeps codes unambiguous.
    pub separator: String,
}

/// Concatenates each label's cluster id across `runs` in order, with
/// [`ABSENT`] where the label is missing from a run.
pub fn label_trajectory(runs: &[BTreeMap<String, usize>]) -> Trajectory {
    let labels: BTreeSet<&String> = runs.iter().flat_map(|r| r.keys()).collect();
    let wide = runs.iter().flat_map(|r| r.values()).any(|&c| c >= 10);
    let separator = if wide { "." } else { "" };
    let mut codes = BTreeMap::new();
    let mut frequencies = BTreeMap::new();
    for label in labels {
        let code = runs
            .iter()
            .map(|r| r.get(label).map_or_else(|| ABSENT.to_string(), |c| c.to_string()))
            .collect::<Vec<_>>()
            .join(separator);
        *frequencies.entry(code.clone()).or_insert(0) += 1;
        codes.insert(label.clone(), code);
    }
    Trajectory {
        codes,
        frequencies,
        separator: separator.to_string(),
    }
}
