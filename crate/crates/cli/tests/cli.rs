use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn cluster(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cluster"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("CLUSTER_THREADS", t),
        None => cmd.env_remove("CLUSTER_THREADS"),
    };
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, input: &Path, out: &Path, cluster: Value) -> std::path::PathBuf {
    let path = dir.join(name);
    let cfg = json!({
        "input_path": input,
        "mapping": {"time_column": "timestamp", "value_column": "value", "label_column": "label"},
        "cluster": cluster,
        "output_dir": out,
    });
    fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

fn fixture(dir: &Path) -> std::path::PathBuf {
    let csv = dir.join("loads.csv");
    let out = cluster(
        &["fixture", "--out", s(&csv), "--per-template", "10", "--seed", "4"],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    csv
}

#[test]
fn fixture_run_sweep_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(dir.path());
    let run_dir = dir.path().join("run");
    let cfg = write_config(
        dir.path(),
        "run.json",
        &csv,
        &run_dir,
        json!({"algorithm": "kmeans", "k": 4}),
    );

    let out = cluster(&["run", "--config", s(&cfg)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["k"], 4);
    let labels: Value = serde_json::from_slice(&fs::read(run_dir.join("labels.json")).unwrap()).unwrap();
    assert_eq!(labels["assignment"].as_object().unwrap().len(), 40);
    let report = fs::read_to_string(run_dir.join("report.html")).unwrap();
    assert_eq!(report.matches("<section class=\"panel\"").count(), 4);

    let sweep_dir = dir.path().join("sweep");
    let out = cluster(
        &[
            "sweep",
            "--config",
            s(&cfg),
            "--k-min",
            "2",
            "--k-max",
            "8",
            "--override",
            &format!("output_dir={}", s(&sweep_dir)),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let scores: Value = serde_json::from_slice(&fs::read(sweep_dir.join("scores.json")).unwrap()).unwrap();
    assert_eq!(scores["suggested_k"], 4);
    assert_eq!(scores["per_k"].as_array().unwrap().len(), 7);

    let out = cluster(
        &["trajectory", "--runs", &format!("{},{}", s(&run_dir), s(&sweep_dir))],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t["codes"].as_object().unwrap().len(), 40);
    // same partition in both runs, so every label repeats its cluster id
    assert!(t["codes"].as_object().unwrap().values().all(|c| {
        let c = c.as_str().unwrap();
        c[..1] == c[1..]
    }));
}

#[test]
fn identical_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(dir.path());
    let out_dir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &csv,
        &out_dir,
        json!({"algorithm": "kshape", "k": 4, "n_init": 3}),
    );
    let mut snapshots = Vec::new();
    for threads in [Some("1"), Some("3"), None] {
        let out = cluster(&["run", "--config", s(&cfg)], threads);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        snapshots.push(["labels.json", "scores.json", "report.html"].map(|f| fs::read(out_dir.join(f)).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    assert_eq!(snapshots[0], snapshots[2]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(dir.path());
    let out_dir = dir.path().join("out");

    let bad = write_config(
        dir.path(),
        "bad.json",
        &csv,
        &out_dir,
        json!({"algorithm": "kshape", "k": 1, "distance": "euclidean"}),
    );
    let out = cluster(&["validate", "--config", s(&bad)], None);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cluster.k") && err.contains("cluster.distance"), "{err}");

    let missing = write_config(
        dir.path(),
        "m.json",
        &dir.path().join("nope.csv"),
        &out_dir,
        json!({"algorithm": "kmeans", "k": 2}),
    );
    assert_eq!(code(&cluster(&["run", "--config", s(&missing)], None)), 3);

    let too_many = write_config(
        dir.path(),
        "t.json",
        &csv,
        &out_dir,
        json!({"algorithm": "kmeans", "k": 41}),
    );
    assert_eq!(code(&cluster(&["run", "--config", s(&too_many)], None)), 3);
    assert!(!out_dir.exists());

    let good = write_config(
        dir.path(),
        "g.json",
        &csv,
        &out_dir,
        json!({"algorithm": "kmeans", "k": 2}),
    );
    assert_eq!(code(&cluster(&["run", "--config", s(&good)], Some("zero"))), 2);
    assert_eq!(
        code(&cluster(
            &["run", "--config", s(&good), "--override", "cluster.linkage=diagonal"],
            None
        )),
        2
    );

    let out = cluster(&["validate", "--config", s(&good)], None);
    assert_eq!(code(&out), 0);
    let echoed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed["cluster"]["max_iter"], 300);
    assert_eq!(echoed["normalization"], "z_score");
}
