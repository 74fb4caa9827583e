//! Ingestion of long-format time-series tables, resampling and gap filling.
//!
//! The flow is `ingest` → `aggregate` → `interpolate_and_align`. The first two
//! operate on a [`RawRecordTable`] where samples may be missing; the last
//! produces a dense [`TimeSeriesDataset`] on a uniform grid.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Duration, NaiveDateTime};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;

/// Which input columns hold the timestamp, the value and the series label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub time_column: String,
    pub value_column: String,
    pub label_column: String,
}

impl ColumnMapping {
    pub fn new(
        time_column: impl Into<String>,
        value_column: impl Into<String>,
        label_column: impl Into<String>,
    ) -> Self {
        Self {
            time_column: time_column.into(),
            value_column: value_column.into(),
            label_column: label_column.into(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let names = [&self.time_column, &self.value_column, &self.label_column];
        if names.iter().any(|n| n.trim().is_empty()) {
            return Err(DatasetError::InvalidMapping("column names must be non-empty".into()));
        }
        if self.time_column == self.value_column
            || self.time_column == self.label_column
            || self.value_column == self.label_column
        {
            return Err(DatasetError::InvalidMapping(
                "time, value and label columns must be distinct".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub delimiter: u8,
    /// `chrono` format string for the time column.
    pub timestamp_format: String,
}

pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.to_string(),
        }
    }
}

/// One observation. `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub timestamp: NaiveDateTime,
    pub value: Option<f64>,
}

/// Samples grouped per label, each group sorted by timestamp.
///
/// Labels iterate in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawRecordTable {
    series: BTreeMap<String, Vec<Sample>>,
}

impl RawRecordTable {
    /// Builds a table from rows, rejecting duplicated (label, timestamp) pairs.
    pub fn from_rows<I, S>(rows: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (S, NaiveDateTime, Option<f64>)>,
        S: Into<String>,
    {
        let mut series: BTreeMap<String, Vec<Sample>> = BTreeMap::new();
        for (label, timestamp, value) in rows {
            let value = value.filter(|v| v.is_finite());
            series
                .entry(label.into())
                .or_default()
                .push(Sample { timestamp, value });
        }
        for (label, samples) in series.iter_mut() {
            samples.sort_by_key(|s| s.timestamp);
            if let Some(w) = samples.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
                return Err(DatasetError::DuplicateSample {
                    label: label.clone(),
                    timestamp: w[0].timestamp,
                });
            }
        }
        Ok(Self { series })
    }

    /// Total number of rows over all labels.
    pub fn len(&self) -> usize {
        self.series.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn series(&self, label: &str) -> Option<&[Sample]> {
        self.series.get(label).map(Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &Sample)> {
        self.series
            .iter()
            .flat_map(|(l, s)| s.iter().map(move |x| (l.as_str(), x)))
    }

    /// Greatest common divisor of all offsets from the earliest timestamp,
    /// i.e. the coarsest uniform step on which every sample lies.
    pub fn sampling_step(&self) -> Option<Duration> {
        let start = self.rows().map(|(_, s)| s.timestamp).min()?;
        let step = self
            .rows()
            .map(|(_, s)| (s.timestamp - start).num_seconds())
            .fold(0i64, gcd);
        (step > 0).then(|| Duration::seconds(step))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn parse_value(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") || cell.eq_ignore_ascii_case("null") {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a header-bearing delimited table and keeps the three mapped columns.
///
/// Unparseable or missing value cells become missing samples; an unparseable
/// timestamp is an error because the sample cannot be placed.
pub fn ingest<R: Read>(
    source: R,
    mapping: &ColumnMapping,
    options: &IngestOptions,
) -> Result<RawRecordTable, DatasetError> {
    mapping.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let label_idx = column(&mapping.label_column)?;
    let time_idx = column(&mapping.time_column)?;
    let value_idx = column(&mapping.value_column)?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, after the header
        let label = record.get(label_idx).unwrap_or_default();
        let raw_time = record.get(time_idx).unwrap_or_default();
        let timestamp = NaiveDateTime::parse_from_str(raw_time, &options.timestamp_format).map_err(|_| {
            DatasetError::BadTimestamp {
                row,
                value: raw_time.to_string(),
                format: options.timestamp_format.clone(),
            }
        })?;
        let value = record.get(value_idx).and_then(parse_value);
        rows.push((label.to_string(), timestamp, value));
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    RawRecordTable::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    Sum,
    Mean,
}

/// Combines the samples of each half-open window `[t, t + target)` anchored at
/// midnight. Missing samples are ignored; a window with only missing samples
/// yields a missing value.
pub fn aggregate(
    table: &RawRecordTable,
    target: Duration,
    method: AggregationMethod,
) -> Result<RawRecordTable, DatasetError> {
    let target_secs = target.num_seconds();
    if target_secs <= 0 {
        return Err(DatasetError::NonPositiveResolution(target_secs));
    }
    if let Some(step) = table.sampling_step() {
        let step_secs = step.num_seconds();
        if target_secs % step_secs != 0 {
            return Err(DatasetError::NonDivisibleResolution { target_secs, step_secs });
        }
    }

    let mut series = BTreeMap::new();
    for (label, samples) in &table.series {
        // window start (epoch seconds) -> (sum, present count)
        let mut windows: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for s in samples {
            let t = s.timestamp.and_utc().timestamp();
            let start = t.div_euclid(target_secs) * target_secs;
            let entry = windows.entry(start).or_insert((0.0, 0));
            if let Some(v) = s.value {
                entry.0 += v;
                entry.1 += 1;
            }
        }
        let out = windows
            .into_iter()
            .map(|(start, (sum, count))| {
                let timestamp = chrono::DateTime::from_timestamp(start, 0)
                    .expect("window start derived from a valid timestamp")
                    .naive_utc();
                let value = match (count, method) {
                    (0, _) => None,
                    (_, AggregationMethod::Sum) => Some(sum),
                    (c, AggregationMethod::Mean) => Some(sum / c as f64),
                };
                Sample { timestamp, value }
            })
            .collect();
        series.insert(label.clone(), out);
    }
    Ok(RawRecordTable { series })
}

/// Labeled collection of equal-length series on a shared uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    labels: Vec<String>,
    grid: Vec<NaiveDateTime>,
    values: Array2<f64>,
    unit: String,
    resolution: Duration,
}

impl TimeSeriesDataset {
    pub fn new(
        labels: Vec<String>,
        grid: Vec<NaiveDateTime>,
        values: Array2<f64>,
        unit: impl Into<String>,
        resolution: Duration,
    ) -> Result<Self, DatasetError> {
        let (n, d) = values.dim();
        if n < 2 || d < 2 {
            return Err(DatasetError::InsufficientData(format!(
                "a dataset needs at least 2 series of at least 2 points, got {n}x{d}"
            )));
        }
        if labels.len() != n || grid.len() != d {
            return Err(DatasetError::InsufficientData(format!(
                "{} labels and {} grid points for a {n}x{d} matrix",
                labels.len(),
                grid.len()
            )));
        }
        if resolution <= Duration::zero() || grid.windows(2).any(|w| w[1] - w[0] != resolution) {
            return Err(DatasetError::InsufficientData(
                "grid must be strictly increasing with a constant step".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::InsufficientData("dataset values must be finite".into()));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(DatasetError::InvalidMapping("labels must be unique".into()));
        }
        Ok(Self {
            labels,
            grid,
            values,
            unit: unit.into(),
            resolution,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn grid(&self) -> &[NaiveDateTime] {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Long-format view, one `(label, timestamp, value)` per cell.
    pub fn to_rows(&self) -> Vec<(String, NaiveDateTime, Option<f64>)> {
        let mut rows = Vec::with_capacity(self.values.len());
        for (i, label) in self.labels.iter().enumerate() {
            for (j, t) in self.grid.iter().enumerate() {
                rows.push((label.clone(), *t, Some(self.values[[i, j]])));
            }
        }
        rows
    }

    /// Writes the dataset as a long-format CSV readable by [`ingest`].
    pub fn write_csv<W: std::io::Write>(
        &self,
        out: W,
        mapping: &ColumnMapping,
        timestamp_format: &str,
    ) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([&mapping.label_column, &mapping.time_column, &mapping.value_column])?;
        for (i, label) in self.labels.iter().enumerate() {
            for (j, t) in self.grid.iter().enumerate() {
                w.write_record([
                    label.clone(),
                    t.format(timestamp_format).to_string(),
                    format!("{}", self.values[[i, j]]),
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Fewer than two non-missing samples.
    InsufficientData,
    /// A run of consecutive missing grid steps longer than the allowed gap.
    GapTooLong,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSeries {
    pub label: String,
    pub reason: DropReason,
    pub valid_samples: usize,
    pub longest_gap: usize,
}

#[derive(Debug, Clone)]
pub struct AlignOptions {
    /// Longest tolerated run of consecutive missing grid steps.
    pub max_gap: usize,
    pub unit: String,
    /// Upper bound on `n * d` for the aligned matrix.
    pub max_cells: usize,
}

pub const DEFAULT_MAX_GAP: usize = 8;

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            max_gap: DEFAULT_MAX_GAP,
            unit: "kW".to_string(),
            max_cells: 50_000_000,
        }
    }
}

/// Output of [`interpolate_and_align`]: the dense dataset and every label that
/// did not make it into it.
#[derive(Debug, Clone)]
pub struct Aligned {
    pub dataset: TimeSeriesDataset,
    pub dropped: Vec<DroppedSeries>,
}

/// Places every series on a common uniform grid and fills gaps.
///
/// Interior gaps are filled linearly between the nearest present neighbours,
/// leading and trailing gaps by the nearest present value. Series with fewer
/// than two present samples, or with a gap longer than `max_gap` steps, are
/// dropped and listed in [`Aligned::dropped`]. Fails when fewer than two series
/// survive.
pub fn interpolate_and_align(table: &RawRecordTable, options: &AlignOptions) -> Result<Aligned, DatasetError> {
    if table.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let step = table
        .sampling_step()
        .ok_or_else(|| DatasetError::InsufficientData("all samples share one timestamp".into()))?;
    let start = table.rows().map(|(_, s)| s.timestamp).min().unwrap();
    let end = table.rows().map(|(_, s)| s.timestamp).max().unwrap();
    let d = ((end - start).num_seconds() / step.num_seconds()) as usize + 1;
    let n_labels = table.series.len();
    if n_labels.saturating_mul(d) > options.max_cells {
        return Err(DatasetError::GridTooLarge {
            cells: n_labels.saturating_mul(d),
            limit: options.max_cells,
        });
    }
    let grid: Vec<NaiveDateTime> = (0..d).map(|j| start + step * j as i32).collect();

    let mut labels = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut dropped = Vec::new();
    for (label, samples) in &table.series {
        let mut slots: Vec<Option<f64>> = vec![None; d];
        for s in samples {
            let j = ((s.timestamp - start).num_seconds() / step.num_seconds()) as usize;
            slots[j] = s.value;
        }
        let valid = slots.iter().filter(|v| v.is_some()).count();
        let longest_gap = longest_missing_run(&slots);
        let reason = if valid < 2 {
            Some(DropReason::InsufficientData)
        } else if longest_gap > options.max_gap {
            Some(DropReason::GapTooLong)
        } else {
            None
        };
        if let Some(reason) = reason {
            dropped.push(DroppedSeries {
                label: label.clone(),
                reason,
                valid_samples: valid,
                longest_gap,
            });
            continue;
        }
        labels.push(label.clone());
        rows.extend(fill_gaps(&slots));
    }

    if labels.len() < 2 {
        let names: Vec<_> = dropped.iter().map(|x| x.label.as_str()).collect();
        return Err(DatasetError::InsufficientData(format!(
            "{} usable series after alignment (dropped: [{}])",
            labels.len(),
            names.join(", ")
        )));
    }
    let values = Array2::from_shape_vec((labels.len(), d), rows).expect("row buffer sized n * d");
    let dataset = TimeSeriesDataset::new(labels, grid, values, options.unit.clone(), step)?;
    Ok(Aligned { dataset, dropped })
}

fn longest_missing_run(slots: &[Option<f64>]) -> usize {
    let mut longest = 0;
    let mut run = 0;
    for s in slots {
        if s.is_none() {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    longest
}

/// Linear fill between present neighbours, nearest-value fill at the edges.
/// Requires at least one present value.
pub(crate) fn fill_gaps(slots: &[Option<f64>]) -> Vec<f64> {
    let present: Vec<(usize, f64)> = slots
        .iter()
        .enumerate()
        .filter_map(|(j, v)| v.map(|v| (j, v)))
        .collect();
    let (first_j, first_v) = present[0];
    let (last_j, last_v) = present[present.len() - 1];
    let mut out = vec![0.0; slots.len()];
    for o in &mut out[..first_j] {
        *o = first_v;
    }
    for w in present.windows(2) {
        let (a, va) = w[0];
        let (b, vb) = w[1];
        out[a] = va;
        for (j, o) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (j - a) as f64 / (b - a) as f64;
            *o = va + t * (vb - va);
        }
    }
    for o in out.iter_mut().skip(last_j) {
        *o = last_v;
    }
    out
}
