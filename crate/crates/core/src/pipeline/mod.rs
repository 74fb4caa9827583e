//! One clustering job from configuration to artifacts.
//!
//! [`run`] executes ingest → aggregate → align → represent → cluster → score
//! → write. Every artifact is rendered in memory first and committed with
//! [`storage::commit`], so a failed run leaves the output directory untouched.

pub mod config;
pub mod fixture;
pub mod output;
pub mod report;
pub mod storage;
pub mod trajectory;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::clustering::{clustering_view, fit, sweep_k, ClusterAssignment, ClusterConfig, KSweepResult};
use crate::dataset::{aggregate, ingest, interpolate_and_align, AlignOptions, DroppedSeries, TimeSeriesDataset};
use crate::error::{Error, Stage};
use crate::representation::{fpca, normalize, RepresentedMatrix};
use crate::validity::{evaluate, ValidityReport};

pub use config::{apply_overrides, validate, RunConfig};
pub use fixture::{generate_fixture, Fixture, FixtureSpec, Template};
pub use output::{labels_value, ScoreSheet, SweepSummary};
pub use report::{render_report, ReportInput};
pub use storage::{LocalStorage, Storage};
pub use trajectory::{label_trajectory, Trajectory};

pub const LABELS_FILE: &str = "labels.json";
pub const SCORES_FILE: &str = "scores.json";
pub const REPORT_FILE: &str = "report.html";

/// Paths of the written artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutputs {
    pub labels_file: PathBuf,
    pub scores_file: PathBuf,
    pub report_file: Option<PathBuf>,
    /// Hex SHA-256 of the canonical config and the input bytes.
    pub run_id: String,
}

/// Everything a run produced, for callers that want more than the files.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outputs: RunOutputs,
    pub dataset: TimeSeriesDataset,
    pub dropped: Vec<DroppedSeries>,
    pub represented: RepresentedMatrix,
    pub assignment: ClusterAssignment,
    pub validity: ValidityReport,
    pub sweep: Option<KSweepResult>,
}

/// Digest of the canonical (key-sorted) config and the input bytes.
pub fn run_id(config: &RunConfig, input: &[u8]) -> String {
    let canonical = serde_json::to_vec(&config.to_value()).expect("config serializes");
    let mut h = Sha256::new();
    h.update((canonical.len() as u64).to_le_bytes());
    h.update(&canonical);
    h.update(Sha256::digest(input));
    hex::encode(h.finalize())
}

/// Runs a validated configuration against the local filesystem.
pub fn run(config: &RunConfig) -> Result<RunOutputs, Error> {
    run_with(&LocalStorage, config).map(|r| r.outputs)
}

struct Progress {
    completed: Vec<Stage>,
}

impl Progress {
    fn step<T, E: Into<Error>>(&mut self, stage: Stage, r: Result<T, E>) -> Result<T, Error> {
        match r {
            Ok(v) => {
                self.completed.push(stage);
                Ok(v)
            }
            Err(e) => Err(Error::Stage {
                stage,
                completed: self.completed.clone(),
                source: Box::new(e.into()),
            }),
        }
    }
}

/// Runs a validated configuration against `storage`.
pub fn run_with(storage: &dyn Storage, config: &RunConfig) -> Result<RunResult, Error> {
    let started = Instant::now();
    let mut p = Progress { completed: Vec::new() };

    let read = storage
        .read(&config.input_path)
        .map_err(|source| Error::Io {
            path: config.input_path.clone(),
            source,
        })
        .and_then(|bytes| {
            let table = ingest(bytes.as_slice(), &config.mapping, &config.ingest_options())?;
            Ok((bytes, table))
        });
    let (input, table) = p.step(Stage::Ingest, read)?;
    let id = run_id(config, &input);

    let table = match &config.aggregation {
        Some(a) => p.step(Stage::Aggregate, aggregate(&table, a.resolution(), a.method))?,
        None => {
            p.completed.push(Stage::Aggregate);
            table
        }
    };

    let aligned = p.step(
        Stage::Align,
        interpolate_and_align(
            &table,
            &AlignOptions {
                max_gap: config.max_gap,
                unit: config.unit.clone(),
                ..AlignOptions::default()
            },
        ),
    )?;
    let dataset = aligned.dataset;
    let dropped = aligned.dropped;

    let normalized = normalize(&dataset, config.normalization);
    let represented = match config.representation.fpca() {
        Some(cfg) => p.step(Stage::Represent, fpca(&normalized, &cfg))?,
        None => {
            p.completed.push(Stage::Represent);
            normalized.clone()
        }
    };

    let (assignment, sweep, cluster_config) = match (config.cluster.k, &config.k_sweep) {
        (Some(k), _) => {
            let cc = config.cluster.config(k);
            let a = p.step(Stage::Cluster, fit(&represented, &cc))?;
            (a, None, cc)
        }
        (None, Some(s)) => {
            let cc = config.cluster.config(s.min);
            let (result, assignments) = p.step(Stage::Cluster, sweep_k(&represented, &cc, s.min, s.max, s.method))?;
            let pick = result.suggested_k - s.min;
            let a = assignments.into_iter().nth(pick).expect("suggested k was swept");
            (a, Some(result), cc.with_k(pick + s.min))
        }
        (None, None) => unreachable!("validated config has k or k_sweep"),
    };

    let validity = p.step(
        Stage::Score,
        evaluate(&represented, &assignment, &cluster_config, started.elapsed()),
    )?;

    let files = render_artifacts(
        config,
        &id,
        &normalized,
        &represented,
        &assignment,
        &validity,
        sweep.as_ref(),
        &dropped,
    );
    let outputs = RunOutputs {
        labels_file: config.output_dir.join(LABELS_FILE),
        scores_file: config.output_dir.join(SCORES_FILE),
        report_file: config.report.then(|| config.output_dir.join(REPORT_FILE)),
        run_id: id.clone(),
    };
    p.step(Stage::Write, write_all(storage, &config.output_dir, &files, &id))?;

    Ok(RunResult {
        outputs,
        dataset,
        dropped,
        represented,
        assignment,
        validity,
        sweep,
    })
}

fn write_all(storage: &dyn Storage, dir: &Path, files: &[(PathBuf, Vec<u8>)], id: &str) -> Result<(), Error> {
    storage.create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    storage::commit(storage, files, &id[..12]).map_err(|(path, source)| Error::Io { path, source })
}

#[allow(clippy::too_many_arguments)]
fn render_artifacts(
    config: &RunConfig,
    id: &str,
    normalized: &RepresentedMatrix,
    represented: &RepresentedMatrix,
    assignment: &ClusterAssignment,
    validity: &ValidityReport,
    sweep: Option<&KSweepResult>,
    dropped: &[DroppedSeries],
) -> Vec<(PathBuf, Vec<u8>)> {
    let labels = output::to_bytes(&labels_value(id, assignment));

    let mut sheet = ScoreSheet::new(id, assignment, validity, config.to_value());
    sheet.dropped = dropped.to_vec();
    sheet.explained_variance_ratio = represented.explained_variance_ratio().map(<[f64]>::to_vec);
    if config.include_timing {
        sheet.elapsed_seconds = Some(validity.elapsed.as_secs_f64());
    }
    sheet.sweep = sweep.map(|s| SweepSummary {
        per_k: s.per_k.clone(),
        suggested_k: s.suggested_k,
        selection_method: s.method,
        elbow_k: s.elbow_k,
        best_silhouette_k: s.best_silhouette_k,
    });
    let scores = output::to_bytes(&sheet.to_value());

    let mut files = vec![
        (config.output_dir.join(LABELS_FILE), labels),
        (config.output_dir.join(SCORES_FILE), scores),
    ];
    if config.report {
        // draw in the space the algorithm saw, unless FPCA took it elsewhere
        let fpca = config.representation.fpca().is_some();
        let cc: ClusterConfig = config.cluster.config(assignment.k());
        let view = clustering_view(normalized, &cc);
        let title = format!(
            "{} / {} / {} clustering, k = {}",
            config.cluster.algorithm.as_str(),
            config.cluster.distance.name(),
            config.normalization.as_str(),
            assignment.k()
        );
        let html = render_report(&ReportInput {
            run_id: id,
            title: &title,
            curves: &view,
            assignment,
            validity,
            use_centers: !fpca,
        });
        files.push((config.output_dir.join(REPORT_FILE), html.into_bytes()));
    }
    files
}

/// Reads the `assignment` object of a labels file.
pub fn read_assignment(storage: &dyn Storage, labels_file: &Path) -> Result<BTreeMap<String, usize>, Error> {
    let bytes = storage.read(labels_file).map_err(|source| Error::Io {
        path: labels_file.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: labels_file.to_path_buf(),
        source,
    })?;
    serde_json::from_value(value.get("assignment").cloned().unwrap_or(Value::Null)).map_err(|source| Error::Json {
        path: labels_file.to_path_buf(),
        source,
    })
}

/// Trajectory codes over the labels files of `run_dirs`, in order.
pub fn trajectory_of_runs(storage: &dyn Storage, run_dirs: &[PathBuf]) -> Result<Trajectory, Error> {
    let runs = run_dirs
        .iter()
        .map(|d| read_assignment(storage, &d.join(LABELS_FILE)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(label_trajectory(&runs))
}
