//! Synthetic daily load profiles with known generating shapes.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;

/// Points per profile: one day at 15-minute resolution.
pub const POINTS_PER_DAY: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// Morning peak, midday valley, larger evening peak.
    ResidentialTwoPeak,
    /// Office-hours plateau, low nights.
    NonresidentialFlat,
    /// Broad daytime hump with the central hours flattened out.
    SummerFlattened,
    /// Office plateau followed by an evening peak.
    Hybrid,
}

impl Template {
    pub const ALL: [Template; 4] = [
        Template::ResidentialTwoPeak,
        Template::NonresidentialFlat,
        Template::SummerFlattened,
        Template::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Template::ResidentialTwoPeak => "residential_two_peak",
            Template::NonresidentialFlat => "nonresidential_flat",
            Template::SummerFlattened => "summer_flattened",
            Template::Hybrid => "hybrid",
        }
    }

    /// Noise-free value at hour `h` in `[0, 24)`.
    pub fn value(&self, h: f64) -> f64 {
        let bump = |mu: f64, sd: f64| (-0.5 * ((h - mu) / sd).powi(2)).exp();
        let rise = |at: f64, rate: f64| 1.0 / (1.0 + (-(h - at) * rate).exp());
        let plateau = |from: f64, to: f64| rise(from, 2.0) * (1.0 - rise(to, 2.0));
        match self {
            Template::ResidentialTwoPeak => 0.3 + 0.7 * bump(8.0, 1.3) + 1.0 * bump(20.0, 1.6),
            Template::NonresidentialFlat => 0.2 + 0.9 * plateau(7.5, 18.5),
            Template::SummerFlattened => {
                0.35 + 0.55 * plateau(10.0, 22.5) + 0.25 * bump(9.0, 1.2) - 0.15 * bump(15.0, 2.0)
            }
            Template::Hybrid => 0.2 + 0.5 * plateau(8.0, 17.0) + 0.9 * bump(20.5, 1.2),
        }
    }

    /// The 96-point noise-free profile.
    pub fn profile(&self) -> Vec<f64> {
        (0..POINTS_PER_DAY).map(|j| self.value(j as f64 * 0.25)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub n_per_template: usize,
    pub templates: Vec<Template>,
    /// Standard deviation of additive noise, relative to the template scale.
    pub noise_sigma: f64,
    /// Per-series amplitude factor is uniform in this range (kW per unit).
    pub amplitude: (f64, f64),
    /// Each series is circularly shifted by a uniform offset in
    /// `[-max_shift, max_shift]` steps.
    pub max_shift: usize,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn new(n_per_template: usize, seed: u64) -> Self {
        Self {
            n_per_template,
            templates: Template::ALL.to_vec(),
            noise_sigma: 0.05,
            amplitude: (50.0, 150.0),
            max_shift: 0,
            seed,
        }
    }
}

/// A generated dataset and its ground truth.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub dataset: TimeSeriesDataset,
    /// Generating template of every row.
    pub truth: Vec<Template>,
}

impl Fixture {
    /// Ground truth as positions in [`Template::ALL`].
    pub fn truth_ids(&self) -> Vec<usize> {
        self.truth.iter().map(|t| *t as usize).collect()
    }
}

/// First grid timestamp: midnight of 18 January 2017.
pub fn fixture_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2017, 1, 18)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

/// Draws `n_per_template` noisy, scaled (and optionally shifted) copies of
/// every template. Labels are `<template>_<index>`, so the label prefix is the
/// ground truth. The same `FixtureSpec` always yields the same dataset.
pub fn generate_fixture(spec: &FixtureSpec) -> Fixture {
    assert!(spec.n_per_template >= 1, "n_per_template must be at least 1");
    assert!(!spec.templates.is_empty(), "at least one template is required");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");
    let n = spec.n_per_template * spec.templates.len();
    let mut values = Array2::zeros((n, POINTS_PER_DAY));
    let mut labels = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let (amp_lo, amp_hi) = spec.amplitude;
    let mut row = 0;
    for template in &spec.templates {
        let base = template.profile();
        for i in 0..spec.n_per_template {
            let amp = if amp_hi > amp_lo {
                rng.random_range(amp_lo..amp_hi)
            } else {
                amp_lo
            };
            let s = if spec.max_shift > 0 {
                rng.random_range(-(spec.max_shift as i64)..=spec.max_shift as i64)
            } else {
                0
            };
            for j in 0..POINTS_PER_DAY {
                let src = (j as i64 - s).rem_euclid(POINTS_PER_DAY as i64) as usize;
                let e = if spec.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                values[[row, j]] = amp * (base[src] + e);
            }
            labels.push(format!("{}_{i:03}", template.as_str()));
            truth.push(*template);
            row += 1;
        }
    }
    let start = fixture_start();
    let grid = (0..POINTS_PER_DAY as i64)
        .map(|j| start + Duration::minutes(15 * j))
        .collect();
    let dataset = TimeSeriesDataset::new(labels, grid, values, "kW", Duration::minutes(15))
        .expect("fixture has at least 2 series");
    Fixture { dataset, truth }
}
