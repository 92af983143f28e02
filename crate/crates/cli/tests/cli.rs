//! End-to-end command tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use augcast::data::synthetic::{household_series, write_electricity_raw};
use augcast::Real;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_augcast")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, dataset: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
[data]
dataset = "{dataset}"
context_length = 48
horizon = 12
big_window = 96
scale_width = 48

[model]
heads = 2
d_k = 4
d_v = 4
ff_dim = 8
embed_dim = 3
blocks = 1

[train]
sampler = "augmented"
batch_size = 16
max_epochs = 2
patience = 2
seed = 7

[eval]
forecast_start = "2014-06-23T00:00:00"
train_weeks = 2
horizon = 24
samples = 10
trials = 1
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn start() -> chrono::NaiveDateTime {
    chrono::NaiveDate::from_ymd_opt(2014, 6, 2)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

#[test]
fn ingest_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    // 5 households, 22 days at 15-minute resolution in the raw layout
    let series = household_series::<Real>(5, 22 * 24, start(), 11);
    let raw = dir.join("raw.txt");
    write_electricity_raw(&series, &raw).unwrap();

    let out1 = run_in(dir, &["ingest", "--source", "raw.txt", "--format", "electricity", "--out", "data1"]);
    assert_ok(&out1, "ingest");
    let out2 = run_in(dir, &["ingest", "--source", "raw.txt", "--format", "electricity", "--out", "data2"]);
    assert_ok(&out2, "re-ingest");
    // identical checksums for identical inputs
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("data1/manifest.json")).unwrap())
            .unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("data2/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["dataset_checksum"], m2["dataset_checksum"]);

    let config = write_config(dir, "data1/dataset.csv");
    let train_out = run_in(
        dir,
        &["train", "--config", config.to_str().unwrap(), "--out", "run_a"],
    );
    assert_ok(&train_out, "train");
    for f in [
        "checkpoint.json",
        "trainlog.jsonl",
        "manifest.json",
        "resolved_config.toml",
        "records.jsonl",
        "plot.csv",
    ] {
        assert!(dir.join("run_a").join(f).exists(), "missing {f}");
    }

    // same seed + config -> bit-identical checkpoint and records
    let train_b = run_in(
        dir,
        &["train", "--config", config.to_str().unwrap(), "--out", "run_b"],
    );
    assert_ok(&train_b, "train again");
    assert_eq!(
        std::fs::read(dir.join("run_a/checkpoint.json")).unwrap(),
        std::fs::read(dir.join("run_b/checkpoint.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.join("run_a/records.jsonl")).unwrap(),
        std::fs::read(dir.join("run_b/records.jsonl")).unwrap()
    );

    // evaluate reproduces the train-time final eval numbers
    let eval_out = run_in(
        dir,
        &[
            "evaluate",
            "--config",
            config.to_str().unwrap(),
            "--checkpoint",
            "run_a/checkpoint.json",
            "--out",
            "eval_a",
        ],
    );
    assert_ok(&eval_out, "evaluate");
    assert_eq!(
        std::fs::read(dir.join("run_a/records.jsonl")).unwrap(),
        std::fs::read(dir.join("eval_a/records.jsonl")).unwrap()
    );

    // manifest mismatch refuses with a diff
    let bad = run_in(
        dir,
        &[
            "evaluate",
            "--config",
            config.to_str().unwrap(),
            "--checkpoint",
            "run_a/checkpoint.json",
            "--out",
            "eval_bad",
            "--data.scale_width",
            "96",
        ],
    );
    assert!(!bad.status.success());
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("scale_width"), "{stderr}");
    assert!(dir.join("eval_bad/error.json").exists());
}

#[test]
fn train_without_dataset_names_the_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("bare.toml"), "[data]\nscale_width = 48\n").unwrap();
    let out = run_in(dir, &["train", "--config", "bare.toml", "--out", "runx"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("data.dataset"), "{stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(
        dir.join("bad.toml"),
        "[data]\ndataset = \"x.csv\"\nmystery = 1\n",
    )
    .unwrap();
    let out = run_in(dir, &["train", "--config", "bad.toml", "--out", "runy"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn grid_search_resumes_from_partial_leaderboard() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let series = household_series::<Real>(3, 20 * 24, start(), 12);
    let raw = dir.join("raw.txt");
    write_electricity_raw(&series, &raw).unwrap();
    assert_ok(
        &run_in(dir, &["ingest", "--source", "raw.txt", "--format", "electricity", "--out", "data"]),
        "ingest",
    );
    let config = dir.join("grid.toml");
    std::fs::write(
        &config,
        r#"
[data]
dataset = "data/dataset.csv"
context_length = 48
horizon = 12
big_window = 96
scale_width = 48

[model]
heads = 2
blocks = 1

[train]
batch_size = 16
max_epochs = 1
patience = 1
seed = 3

[grid]
d_k_d_v = [3, 4]
ff_dim = [6]
embed_dim = [2]
"#,
    )
    .unwrap();
    let first = run_in(
        dir,
        &["grid-search", "--config", config.to_str().unwrap(), "--out", "grid"],
    );
    assert_ok(&first, "grid search");
    let board: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("grid/leaderboard.json")).unwrap())
            .unwrap();
    assert_eq!(board.len(), 2);
    // ascending by validation loss
    assert!(board[0]["val_nll"].as_f64().unwrap() <= board[1]["val_nll"].as_f64().unwrap());

    // resume: nothing left to do, merged board unchanged
    let second = run_in(
        dir,
        &["grid-search", "--config", config.to_str().unwrap(), "--out", "grid"],
    );
    assert_ok(&second, "grid resume");
    let stdout = String::from_utf8_lossy(&second.stdout);
    assert!(stdout.contains("resuming"), "{stdout}");
    let board2: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("grid/leaderboard.json")).unwrap())
            .unwrap();
    assert_eq!(board2.len(), 2);
}

#[test]
fn synthetic_compare_samplers_writes_all_modes() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let config = dir.join("syn.toml");
    std::fs::write(
        &config,
        r#"
[data]
context_length = 48
horizon = 12

[train]
batch_size = 16
max_epochs = 1
patience = 1
seed = 5

[eval]
forecast_start = "2014-06-23T00:00:00"
samples = 5
trials = 1
"#,
    )
    .unwrap();
    let out = run_in(
        dir,
        &[
            "compare-samplers",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "syn",
            "--synthetic",
            "period=96,instances=3,epochs=1",
        ],
    );
    assert_ok(&out, "synthetic compare");
    let records = std::fs::read_to_string(dir.join("syn/records.jsonl")).unwrap();
    for mode in ["vanilla", "fixed", "augmented"] {
        assert!(records.contains(mode), "missing {mode} in records");
    }
    // two conditions (long + control) x three modes x one trial x two rhos
    assert_eq!(records.lines().count(), 12);
    assert!(dir.join("syn/plot.csv").exists());
    assert!(dir.join("syn/table.txt").exists());
}
