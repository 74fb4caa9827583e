use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),
    #[error("column `{0}` is not present in the input header")]
    MissingColumn(String),
    #[error("duplicate sample for label `{label}` at {timestamp}")]
    DuplicateSample { label: String, timestamp: NaiveDateTime },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("row {row}: cannot parse timestamp `{value}` with format `{format}`")]
    BadTimestamp { row: usize, value: String, format: String },
    #[error("target resolution of {target_secs} s is not a multiple of the source step of {step_secs} s")]
    NonDivisibleResolution { target_secs: i64, step_secs: i64 },
    #[error("resolution must be positive, got {0} s")]
    NonPositiveResolution(i64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("aligned grid would hold {cells} cells, above the limit of {limit}")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error("number of components {p} outside [1, {max}]")]
    InvalidComponents { p: usize, max: usize },
    #[error("at least {needed} rows are required, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("eigendecomposition produced non-finite values")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("warping window {window} is smaller than the length difference {diff}")]
    InfeasibleWindow { window: usize, diff: usize },
    #[error("zero-norm series makes the normalized cross-correlation undefined")]
    ZeroVector,
    #[error("at least 2 rows are required for a distance matrix, got {0}")]
    TooFewRows(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} exceeds the number of series n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("ward linkage requires the euclidean distance")]
    WardRequiresEuclidean,
    #[error("{algorithm} does not support the {distance} distance")]
    UnsupportedDistance {
        algorithm: &'static str,
        distance: &'static str,
    },
    #[error("invalid k range [{min}, {max}] for n = {n}")]
    InvalidRange { min: usize, max: usize, n: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidityError {
    #[error("index undefined for k = {k} with n = {n}")]
    DegenerateK { k: usize, n: usize },
    #[error("centroids of clusters {0} and {1} coincide")]
    CoincidentCentroids(usize, usize),
    #[error("assignment covers {assigned} rows but the matrix has {rows}")]
    ShapeMismatch { assigned: usize, rows: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One violated constraint, addressed by a dotted field path such as `cluster.k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

/// All constraint violations found in a configuration, not only the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub errors: Vec<FieldError>,
}

impl ValidationError {
    pub fn paths(&self) -> Vec<&str> {
        self.errors.iter().map(|e| e.path.as_str()).collect()
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s):", self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  {}: {}", e.path, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Aggregate,
    Align,
    Represent,
    Cluster,
    Score,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Ingest => "ingest",
            Stage::Aggregate => "aggregate",
            Stage::Align => "align",
            Stage::Represent => "represent",
            Stage::Cluster => "cluster",
            Stage::Score => "score",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("stage `{stage}` failed after completing [{}]: {source}", completed_list(.completed))]
    Stage {
        stage: Stage,
        completed: Vec<Stage>,
        #[source]
        source: Box<Error>,
    },
}

fn completed_list(stages: &[Stage]) -> String {
    stages.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// Coarse error classes, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Input,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_) => ErrorClass::Validation,
            Error::Dataset(_) | Error::Io { .. } | Error::Json { .. } => ErrorClass::Input,
            Error::Cluster(ClusterError::KTooLarge { .. } | ClusterError::InvalidRange { .. }) => ErrorClass::Input,
            Error::Representation(RepresentationError::InvalidComponents { .. })
            | Error::Representation(RepresentationError::TooFewRows { .. }) => ErrorClass::Input,
            Error::Representation(_) | Error::Metric(_) | Error::Cluster(_) | Error::Validity(_) => {
                ErrorClass::Internal
            }
            Error::Stage { source, .. } => source.class(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Input => 3,
            ErrorClass::Internal => 4,
        }
    }
}
