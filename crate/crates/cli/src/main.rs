//! `cluster`: command-line front end for the load-profile clustering pipeline.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 input or
//! data problem, 4 internal or numeric failure. `CLUSTER_THREADS` caps the
//! worker pool (default: all cores).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use loadclust::dataset::{ColumnMapping, DEFAULT_TIMESTAMP_FORMAT};
use loadclust::error::{FieldError, ValidationError};
use loadclust::pipeline::fixture::{generate_fixture, FixtureSpec};
use loadclust::pipeline::{self, apply_overrides, validate, LocalStorage, RunConfig};
use loadclust::Error;

#[derive(Parser)]
#[command(name = "cluster", version, about = "Cluster daily load profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fixed-k clustering job.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Dotted `key=value` override, e.g. `cluster.k=5`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Cluster for every k in a range and pick one.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        /// `elbow` or `best_silhouette`.
        #[arg(long)]
        method: Option<String>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Cluster trajectory codes across run output directories, in order.
    Trajectory {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        /// Write the result here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic long-format CSV of the four template shapes.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        per_template: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Maximum circular shift in 15-minute steps.
        #[arg(long, default_value_t = 0)]
        max_shift: usize,
    },
    /// Check a configuration and print it with all defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn field_error(path: &str, message: impl Into<String>) -> Error {
    Error::Validation(ValidationError {
        errors: vec![FieldError {
            path: path.to_string(),
            message: message.into(),
        }],
    })
}

fn load_config(path: &Path, overrides: &[String]) -> Result<Value, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut raw: Value = serde_json::from_str(&text).map_err(|e| field_error("", format!("not valid JSON: {e}")))?;
    apply_overrides(&mut raw, overrides.iter().map(String::as_str))?;
    Ok(raw)
}

fn summary(result: &pipeline::RunResult) -> Value {
    let o = &result.outputs;
    json!({
        "run_id": o.run_id,
        "k": result.assignment.k(),
        "labels_file": o.labels_file,
        "scores_file": o.scores_file,
        "report_file": o.report_file,
        "dropped": result.dropped.len(),
        "suggested_k": result.sweep.as_ref().map(|s| s.suggested_k),
    })
}

fn execute(config: &RunConfig) -> Result<(), Error> {
    let result = pipeline::run_with(&LocalStorage, config)?;
    println!("{}", serde_json::to_string_pretty(&summary(&result)).unwrap());
    Ok(())
}

fn threads() -> Result<usize, Error> {
    match std::env::var("CLUSTER_THREADS") {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| field_error("CLUSTER_THREADS", format!("expected a positive integer, got `{v}`"))),
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, overrides } => {
            let config = validate(&load_config(&config, &overrides)?)?;
            if config.k_sweep.is_some() {
                return Err(field_error(
                    "k_sweep",
                    "`run` needs a fixed cluster.k; use `sweep` for a range",
                ));
            }
            execute(&config)
        }
        Command::Sweep {
            config,
            k_min,
            k_max,
            method,
            overrides,
        } => {
            let mut raw = load_config(&config, &overrides)?;
            if !raw.is_object() {
                return Err(field_error("", "expected an object"));
            }
            if let Some(cluster) = raw.get_mut("cluster").and_then(Value::as_object_mut) {
                cluster.remove("k");
            }
            let mut sweep = json!({"min": k_min, "max": k_max});
            if let Some(m) = method {
                sweep["method"] = Value::String(m);
            }
            raw["k_sweep"] = sweep;
            execute(&validate(&raw)?)
        }
        Command::Trajectory { runs, out } => {
            if runs.len() < 2 {
                return Err(field_error("runs", "at least two run directories are required"));
            }
            let t = pipeline::trajectory_of_runs(&LocalStorage, &runs)?;
            let text = serde_json::to_string_pretty(&t).unwrap() + "\n";
            match out {
                Some(path) => pipeline::storage::commit(&LocalStorage, &[(path, text.into_bytes())], "trajectory")
                    .map_err(|(path, source)| Error::Io { path, source }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Fixture {
            out,
            per_template,
            seed,
            noise,
            max_shift,
        } => {
            if per_template == 0 {
                return Err(field_error("per_template", "must be at least 1"));
            }
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(field_error("noise", "must be a finite non-negative number"));
            }
            let mut spec = FixtureSpec::new(per_template, seed);
            spec.noise_sigma = noise;
            spec.max_shift = max_shift;
            let fixture = generate_fixture(&spec);
            let mut bytes = Vec::new();
            fixture.dataset.write_csv(
                &mut bytes,
                &ColumnMapping::new("timestamp", "value", "label"),
                DEFAULT_TIMESTAMP_FORMAT,
            )?;
            pipeline::storage::commit(&LocalStorage, &[(out.clone(), bytes)], "fixture")
                .map_err(|(path, source)| Error::Io { path, source })?;
            eprintln!("wrote {} series to {}", fixture.dataset.n_series(), out.display());
            Ok(())
        }
        Command::Validate { config, overrides } => {
            let config = validate(&load_config(&config, &overrides)?)?;
            println!("{}", serde_json::to_string_pretty(&config.to_value()).unwrap());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads().and_then(|n| loadclust::with_thread_limit(n, || dispatch(cli.command)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
