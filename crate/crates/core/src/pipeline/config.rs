//! The declarative run configuration.
//!
//! A configuration is a JSON document. [`validate`] reads it leniently, checks
//! every field and every cross-field rule, and either returns a [`RunConfig`]
//! with all defaults filled in or one [`ValidationError`] listing every
//! violation with its dotted field path.

use std::path::PathBuf;

use chrono::Duration;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::clustering::{Algorithm, ClusterConfig, KSelection, Linkage, DEFAULT_MAX_ITER, DEFAULT_N_INIT};
use crate::dataset::{AggregationMethod, ColumnMapping, IngestOptions, DEFAULT_MAX_GAP, DEFAULT_TIMESTAMP_FORMAT};
use crate::error::{FieldError, ValidationError};
use crate::metrics::DistanceKind;
use crate::representation::{FpcaConfig, NormalizationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub resolution_minutes: u32,
    pub method: AggregationMethod,
}

impl AggregationConfig {
    pub fn resolution(&self) -> Duration {
        Duration::minutes(i64::from(self.resolution_minutes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepresentationConfig {
    #[default]
    None,
    Fpca {
        components: usize,
        center: bool,
    },
}

impl RepresentationConfig {
    pub fn fpca(&self) -> Option<FpcaConfig> {
        match *self {
            RepresentationConfig::None => None,
            RepresentationConfig::Fpca { components, center } => Some(FpcaConfig { components, center }),
        }
    }
}

/// Clustering parameters. `k` is absent in sweep mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSection {
    pub algorithm: Algorithm,
    pub k: Option<usize>,
    pub distance: DistanceKind,
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
    pub linkage: Linkage,
}

impl ClusterSection {
    /// The algorithm configuration for a given `k`.
    pub fn config(&self, k: usize) -> ClusterConfig {
        ClusterConfig {
            algorithm: self.algorithm,
            k,
            distance: self.distance,
            seed: self.seed,
            max_iter: self.max_iter,
            n_init: self.n_init,
            linkage: self.linkage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSweepConfig {
    pub min: usize,
    pub max: usize,
    pub method: KSelection,
}

/// A validated configuration with every default materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub mapping: ColumnMapping,
    pub timestamp_format: String,
    pub delimiter: String,
    pub aggregation: Option<AggregationConfig>,
    pub max_gap: usize,
    pub unit: String,
    pub normalization: NormalizationKind,
    pub representation: RepresentationConfig,
    pub cluster: ClusterSection,
    pub k_sweep: Option<KSweepConfig>,
    pub output_dir: PathBuf,
    pub report: bool,
    /// Adds `elapsed_seconds` to the scores file, which then differs between
    /// otherwise identical runs.
    pub include_timing: bool,
}

impl RunConfig {
    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            delimiter: self.delimiter.as_bytes()[0],
            timestamp_format: self.timestamp_format.clone(),
        }
    }

    /// Canonical JSON form, keys sorted.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

const TOP_KEYS: &[&str] = &[
    "input_path",
    "mapping",
    "timestamp_format",
    "delimiter",
    "aggregation",
    "max_gap",
    "unit",
    "normalization",
    "representation",
    "cluster",
    "k_sweep",
    "output_dir",
    "report",
    "include_timing",
];

/// Collects field errors while walking a JSON object.
struct Reader {
    errors: Vec<FieldError>,
}

impl Reader {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn object<'a>(&mut self, value: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match value.as_object() {
            Some(obj) => {
                for key in obj.keys() {
                    if !allowed.contains(&key.as_str()) {
                        self.push(&join(path, key), "unknown field");
                    }
                }
                Some(obj)
            }
            None => {
                self.push(path, "expected an object");
                None
            }
        }
    }

    /// `Ok(None)` when the key is absent or null.
    fn field<T: DeserializeOwned>(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<T> {
        let full = join(path, key);
        match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => match T::deserialize(v) {
                Ok(t) => Some(t),
                Err(e) => {
                    self.push(&full, e.to_string());
                    None
                }
            },
        }
    }

    fn required<T: DeserializeOwned>(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<T> {
        if matches!(obj.get(key), None | Some(Value::Null)) {
            self.push(&join(path, key), "required");
            return None;
        }
        self.field(obj, path, key)
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Checks a raw configuration and fills defaults.
pub fn validate(raw: &Value) -> Result<RunConfig, ValidationError> {
    let mut r = Reader { errors: Vec::new() };
    let empty = Map::new();
    let top = r.object(raw, "", TOP_KEYS).unwrap_or(&empty);

    let input_path: Option<PathBuf> = r.required(top, "", "input_path");
    if input_path.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
        r.push("input_path", "must not be empty");
    }
    let output_dir: Option<PathBuf> = r.required(top, "", "output_dir");
    if output_dir.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
        r.push("output_dir", "must not be empty");
    }

    let mapping = match top.get("mapping") {
        None | Some(Value::Null) => {
            r.push("mapping", "required");
            None
        }
        Some(v) => r
            .object(v, "mapping", &["time_column", "value_column", "label_column"])
            .and_then(|m| {
                let time: Option<String> = r.required(m, "mapping", "time_column");
                let value: Option<String> = r.required(m, "mapping", "value_column");
                let label: Option<String> = r.required(m, "mapping", "label_column");
                Some(ColumnMapping::new(time?, value?, label?))
            }),
    };
    if let Some(m) = &mapping {
        if let Err(e) = m.validate() {
            r.push("mapping", e.to_string());
        }
    }

    let timestamp_format: String = r
        .field(top, "", "timestamp_format")
        .unwrap_or_else(|| DEFAULT_TIMESTAMP_FORMAT.to_string());
    if timestamp_format.trim().is_empty() {
        r.push("timestamp_format", "must not be empty");
    }
    let delimiter: String = r.field(top, "", "delimiter").unwrap_or_else(|| ",".to_string());
    if delimiter.len() != 1 || !delimiter.is_ascii() {
        r.push("delimiter", "must be a single ASCII character");
    }

    let aggregation = match top.get("aggregation") {
        None | Some(Value::Null) => None,
        Some(v) => r
            .object(v, "aggregation", &["resolution_minutes", "method"])
            .and_then(|a| {
                let minutes: Option<u32> = r.required(a, "aggregation", "resolution_minutes");
                if minutes == Some(0) {
                    r.push("aggregation.resolution_minutes", "must be positive");
                }
                let method = r.field(a, "aggregation", "method").unwrap_or(AggregationMethod::Mean);
                minutes.filter(|&m| m > 0).map(|resolution_minutes| AggregationConfig {
                    resolution_minutes,
                    method,
                })
            }),
    };

    let max_gap = r.field(top, "", "max_gap").unwrap_or(DEFAULT_MAX_GAP);
    let unit = r.field(top, "", "unit").unwrap_or_else(|| "kW".to_string());
    let normalization = r.field(top, "", "normalization").unwrap_or_default();

    let representation = match top.get("representation") {
        None | Some(Value::Null) => RepresentationConfig::None,
        Some(Value::String(s)) if s == "none" => RepresentationConfig::None,
        Some(v) => r
            .object(v, "representation", &["kind", "components", "center"])
            .and_then(|o| {
                let kind: Option<String> = r.required(o, "representation", "kind");
                match kind.as_deref() {
                    Some("none") => Some(RepresentationConfig::None),
                    Some("fpca") => {
                        let components: Option<usize> = r.required(o, "representation", "components");
                        if components == Some(0) {
                            r.push("representation.components", "must be at least 1");
                        }
                        let center = r.field(o, "representation", "center").unwrap_or(true);
                        components
                            .filter(|&p| p > 0)
                            .map(|components| RepresentationConfig::Fpca { components, center })
                    }
                    Some(other) => {
                        r.push("representation.kind", format!("unknown representation `{other}`"));
                        None
                    }
                    None => None,
                }
            })
            .unwrap_or_default(),
    };

    let cluster = match top.get("cluster") {
        None | Some(Value::Null) => {
            r.push("cluster", "required");
            None
        }
        Some(v) => r
            .object(
                v,
                "cluster",
                &["algorithm", "k", "distance", "seed", "max_iter", "n_init", "linkage"],
            )
            .and_then(|c| cluster_section(&mut r, c)),
    };

    let k_sweep = match top.get("k_sweep") {
        None | Some(Value::Null) => None,
        Some(v) => r.object(v, "k_sweep", &["min", "max", "method"]).and_then(|s| {
            let min: Option<usize> = r.required(s, "k_sweep", "min");
            let max: Option<usize> = r.required(s, "k_sweep", "max");
            let method = r.field(s, "k_sweep", "method").unwrap_or_default();
            if min.is_some_and(|m| m < 2) {
                r.push("k_sweep.min", "must be at least 2");
            }
            if let (Some(lo), Some(hi)) = (min, max) {
                if lo > hi {
                    r.push("k_sweep.max", "must not be below k_sweep.min");
                }
            }
            Some(KSweepConfig {
                min: min?,
                max: max?,
                method,
            })
        }),
    };
    let sweep_given = !matches!(top.get("k_sweep"), None | Some(Value::Null));
    if let Some(c) = &cluster {
        match (c.k.is_some(), sweep_given) {
            (true, true) => r.push("k_sweep", "cluster.k and k_sweep are mutually exclusive"),
            (false, false) => r.push("cluster.k", "either cluster.k or k_sweep is required"),
            _ => {}
        }
    }

    let report = r.field(top, "", "report").unwrap_or(true);
    let include_timing = r.field(top, "", "include_timing").unwrap_or(false);

    if !r.errors.is_empty() {
        return Err(ValidationError { errors: r.errors });
    }
    Ok(RunConfig {
        input_path: input_path.expect("checked"),
        mapping: mapping.expect("checked"),
        timestamp_format,
        delimiter,
        aggregation,
        max_gap,
        unit,
        normalization,
        representation,
        cluster: cluster.expect("checked"),
        k_sweep,
        output_dir: output_dir.expect("checked"),
        report,
        include_timing,
    })
}

fn cluster_section(r: &mut Reader, c: &Map<String, Value>) -> Option<ClusterSection> {
    let algorithm: Option<Algorithm> = r.required(c, "cluster", "algorithm");
    let k: Option<usize> = r.field(c, "cluster", "k");
    if k.is_some_and(|k| k < 2) {
        r.push("cluster.k", "must be at least 2");
    }
    // a bare string is accepted as shorthand for a distance without parameters
    let distance: Option<DistanceKind> = match c.get("distance") {
        Some(Value::String(s)) => {
            let mut m = Map::new();
            m.insert("kind".into(), Value::String(s.clone()));
            let mut wrapped = Map::new();
            wrapped.insert("distance".into(), Value::Object(m));
            r.field(&wrapped, "cluster", "distance")
        }
        _ => r.field(c, "cluster", "distance"),
    };
    let seed = r.field(c, "cluster", "seed").unwrap_or(0);
    let max_iter = r.field(c, "cluster", "max_iter").unwrap_or(DEFAULT_MAX_ITER);
    if max_iter == 0 {
        r.push("cluster.max_iter", "must be at least 1");
    }
    let n_init = r.field(c, "cluster", "n_init").unwrap_or(DEFAULT_N_INIT);
    if n_init == 0 {
        r.push("cluster.n_init", "must be at least 1");
    }
    let linkage = r.field(c, "cluster", "linkage").unwrap_or_default();
    let algorithm = algorithm?;
    let distance = distance.unwrap_or_else(|| algorithm.default_distance());
    let section = ClusterSection {
        algorithm,
        k,
        distance,
        seed,
        max_iter: max_iter.max(1),
        n_init: n_init.max(1),
        linkage,
    };
    if let Err(e) = section.config(2).check_compatibility() {
        let path = match e {
            crate::error::ClusterError::WardRequiresEuclidean if c.contains_key("linkage") => "cluster.linkage",
            _ => "cluster.distance",
        };
        r.push(path, e.to_string());
    }
    Some(section)
}

/// Sets `value` at a dotted `path`, creating objects on the way. The value is
/// read as JSON when it parses, otherwise as a string.
pub fn apply_override(raw: &mut Value, path: &str, value: &str) -> Result<(), FieldError> {
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(FieldError {
            path: path.to_string(),
            message: "malformed override path".into(),
        });
    }
    let mut cursor = raw;
    for key in &keys[..keys.len() - 1] {
        if !cursor.is_object() {
            return Err(FieldError {
                path: path.to_string(),
                message: format!("`{key}` is not inside an object"),
            });
        }
        cursor = cursor
            .as_object_mut()
            .unwrap()
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if cursor.is_null() {
            *cursor = Value::Object(Map::new());
        }
    }
    match cursor.as_object_mut() {
        Some(obj) => {
            obj.insert(keys[keys.len() - 1].to_string(), parsed);
            Ok(())
        }
        None => Err(FieldError {
            path: path.to_string(),
            message: "parent is not an object".into(),
        }),
    }
}

/// Parses `key=value` overrides and applies them in order.
pub fn apply_overrides<'a>(
    raw: &mut Value,
    overrides: impl IntoIterator<Item = &'a str>,
) -> Result<(), ValidationError> {
    let mut errors = Vec::new();
    for o in overrides {
        match o.split_once('=') {
            Some((k, v)) => {
                if let Err(e) = apply_override(raw, k.trim(), v) {
                    errors.push(e);
                }
            }
            None => errors.push(FieldError {
                path: o.to_string(),
                message: "override must look like key=value".into(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ValidationError { errors })
    }
}
