//! End-to-end tests of the `gsnet` binary: exit codes, artifacts, seed
//! handling, and byte-level reproducibility through the filesystem.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsnet"))
        .current_dir(dir)
        .args(args)
        .env_remove("GSNET_SEED")
        .output()
        .expect("binary runs")
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn gen_data_writes_series_and_adjacency() {
    let dir = tempdir();
    let out = gsnet(
        dir.path(),
        &[
            "gen-data", "--nodes", "12", "--steps", "96", "--seed", "7", "--out", "d",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("d/series.csv").exists());
    assert!(dir.path().join("d/series.adj").exists());
    // Resolved configuration precedes the action output.
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with('{'), "no resolved config line: {stdout}");
    assert!(stdout.contains("\"command\":\"gen-data\""));
}

#[test]
fn train_then_eval_produces_finite_metrics() {
    let dir = tempdir();
    assert!(gsnet(
        dir.path(),
        &["gen-data", "--nodes", "10", "--steps", "300", "--seed", "3", "--out", "d"]
    )
    .status
    .success());
    let out = gsnet(
        dir.path(),
        &[
            "train", "--data", "d", "--model", "gsnet", "--epochs", "2", "--dim", "4",
            "--lr", "0.002", "--out", "run",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("run/train_log.csv").exists());
    assert!(dir.path().join("run/model.ckpt").exists());
    let log = fs::read_to_string(dir.path().join("run/train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_mae,val_mae,val_mape,val_rmse,seconds"));

    let out = gsnet(dir.path(), &["eval", "--data", "d", "--out", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/metrics.json")).unwrap())
            .unwrap();
    assert!(metrics["mae"].as_f64().unwrap().is_finite());
    assert!(metrics["rmse"].as_f64().unwrap().is_finite());
}

#[test]
fn identical_seeds_reproduce_artifacts_byte_for_byte() {
    let dir = tempdir();
    assert!(gsnet(
        dir.path(),
        &["gen-data", "--nodes", "8", "--steps", "240", "--seed", "5", "--out", "d"]
    )
    .status
    .success());
    for run in ["r1", "r2"] {
        let out = gsnet(
            dir.path(),
            &[
                "train", "--data", "d", "--model", "gsnet", "--epochs", "3", "--dim", "4",
                "--seed", "9", "--no-timing", "--out", run,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ckpt1 = fs::read(dir.path().join("r1/model.ckpt")).unwrap();
    let ckpt2 = fs::read(dir.path().join("r2/model.ckpt")).unwrap();
    assert_eq!(ckpt1, ckpt2, "checkpoints differ between identical runs");
    let log1 = fs::read(dir.path().join("r1/train_log.csv")).unwrap();
    let log2 = fs::read(dir.path().join("r2/train_log.csv")).unwrap();
    assert_eq!(log1, log2, "logs differ between identical runs");
}

#[test]
fn env_seed_overrides_flag() {
    let dir = tempdir();
    let out = Command::new(env!("CARGO_BIN_EXE_gsnet"))
        .current_dir(dir.path())
        .args(["gen-data", "--nodes", "8", "--steps", "96", "--seed", "1", "--out", "a"])
        .env("GSNET_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"seed\":42"));
    assert!(gsnet(
        dir.path(),
        &["gen-data", "--nodes", "8", "--steps", "96", "--seed", "42", "--out", "b"]
    )
    .status
    .success());
    let a = fs::read(dir.path().join("a/series.csv")).unwrap();
    let b = fs::read(dir.path().join("b/series.csv")).unwrap();
    assert_eq!(a, b, "GSNET_SEED=42 should match --seed 42");
}

#[test]
fn verify_theorem_happy_path() {
    let dir = tempdir();
    let out = gsnet(
        dir.path(),
        &[
            "verify-theorem", "--n", "12", "--rank", "3", "--trials", "20", "--out", "v",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/theorem.json")).unwrap())
            .unwrap();
    assert!(report["max_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["distinct_conjugated_cores"], 20);
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    let dir = tempdir();
    // Unknown flag → clap usage error.
    let out = gsnet(dir.path(), &["gen-data", "--bogus-flag", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));

    // Steps below the generator minimum → domain error.
    let out = gsnet(
        dir.path(),
        &["gen-data", "--nodes", "8", "--steps", "10", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // Sparsity on a gsnet checkpoint → domain error with a clear message.
    assert!(gsnet(
        dir.path(),
        &["gen-data", "--nodes", "8", "--steps", "240", "--seed", "2", "--out", "d"]
    )
    .status
    .success());
    assert!(gsnet(
        dir.path(),
        &[
            "train", "--data", "d", "--model", "gsnet", "--epochs", "1", "--dim", "4", "--out",
            "run"
        ],
    )
    .status
    .success());
    let out = gsnet(
        dir.path(),
        &["sparsity", "--ckpt", "run/model.ckpt", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dense"));
}

#[test]
fn sparsity_reports_on_dense_checkpoint() {
    let dir = tempdir();
    assert!(gsnet(
        dir.path(),
        &["gen-data", "--nodes", "10", "--steps", "240", "--seed", "4", "--out", "d"]
    )
    .status
    .success());
    assert!(gsnet(
        dir.path(),
        &[
            "train", "--data", "d", "--model", "dense", "--epochs", "1", "--dim", "4", "--out",
            "run"
        ],
    )
    .status
    .success());
    let out = gsnet(
        dir.path(),
        &[
            "sparsity", "--ckpt", "run/model.ckpt", "--planted", "d/series.adj", "--out", "run",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/sparsity.json")).unwrap())
            .unwrap();
    assert!(report["gini"].as_f64().unwrap() >= 0.0);
    assert!(report["planted"]["gini"].as_f64().unwrap() > 0.5);
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = tempdir();
    let out = gsnet(
        dir.path(),
        &[
            "bench", "--ns", "16,32,64", "--models", "gsnet", "--reps", "3", "--out", "b",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("b/scaling.csv")).unwrap();
    assert!(csv.starts_with("model,N,epoch_seconds,step_flops,param_bytes,activation_bytes"));
    assert_eq!(csv.lines().count(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/scaling.json")).unwrap())
            .unwrap();
    assert!(summary["models"][0]["flop_exponent"].as_f64().unwrap() > 0.5);
}
