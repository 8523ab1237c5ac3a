//! End-to-end tests of the command-line binary: exit codes, output files,
//! flag/config precedence, and run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::Command;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stabtune"))
}

fn simulate_toy(dir: &Path, seed: &str) {
    let out = bin()
        .args(["simulate", "--n", "40", "--p", "15", "--block-size", "3", "--seed", seed, "--out"])
        .arg(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "simulate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_lists_all_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "tune", "stabsel", "experiment", "nested-cv", "measures"] {
        assert!(text.contains(sub), "--help does not mention {sub}");
    }
}

#[test]
fn simulate_then_tune_pipeline() {
    let dir = TempDir::new().unwrap();
    simulate_toy(dir.path(), "1");
    assert!(dir.path().join("dataset.csv").exists());
    assert!(dir.path().join("ground_truth.json").exists());

    let config = serde_json::json!({
        "seed": 5,
        "tune": {
            "data": dir.path().join("dataset.csv"),
            "approach": "adj",
            "ground_truth": dir.path().join("ground_truth.json"),
            "folds": 4,
            "k_grid": [0, 1, 2, 3]
        }
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out = bin()
        .args(["tune", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "tune failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("tuning.csv").exists());
    let chosen = fs::read_to_string(dir.path().join("chosen.json")).unwrap();
    assert!(chosen.contains("\"approach\": \"adj\""));
    assert!(chosen.contains("stability"));
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();

    // block size larger than p
    let out = bin()
        .args(["simulate", "--p", "10", "--block-size", "50", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("block_size"));

    // malformed config file
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    let out = bin()
        .args(["measures", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // unknown flag (rejected by the parser)
    let out = bin().args(["simulate", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // tune without a dataset
    let out = bin()
        .args(["tune", "--approach", "acc", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measures_prints_machine_readable_summary() {
    let dir = TempDir::new().unwrap();
    let sets = dir.path().join("sets.json");
    fs::write(&sets, r#"{"p": 6, "sets": [[0, 1], [0, 1]]}"#).unwrap();

    let out = bin()
        .args(["measures", "--sets"])
        .arg(&sets)
        .args(["--block-size", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "measures failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"smu\":1.0"));
    assert!(stdout.contains("\"sma\":1.0"));
    assert!(dir.path().join("measures.json").exists());
}

#[test]
fn experiment_runs_are_byte_identical() {
    let config = serde_json::json!({
        "experiment": {
            "scenarios": ["p200_b1"],
            "replications": 1,
            "approaches": ["truth", "acc"],
            "run": {"folds": 4, "k_max": 3, "stabsel_points": 2, "timings": false}
        }
    });
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let cfg_path = dir.path().join("config.json");
        fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
        let out = bin()
            .args(["experiment", "--seed", "3", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "experiment failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(fs::read(dir.path().join("results.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 3); // header + truth + acc
}

#[test]
fn seed_flag_overrides_config_seed() {
    let with_config_seed = |flag_seed: Option<&str>| {
        let dir = TempDir::new().unwrap();
        let cfg_path = dir.path().join("config.json");
        fs::write(
            &cfg_path,
            r#"{"seed": 1, "simulate": {"n": 20, "p": 10, "block_size": 2}}"#,
        )
        .unwrap();
        let mut cmd = bin();
        cmd.args(["simulate", "--config"]).arg(&cfg_path);
        if let Some(s) = flag_seed {
            cmd.args(["--seed", s]);
        }
        cmd.arg("--out").arg(dir.path());
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        fs::read(dir.path().join("dataset.csv")).unwrap()
    };

    let config_only = with_config_seed(None);
    let flag_matches_config = with_config_seed(Some("1"));
    let flag_differs = with_config_seed(Some("2"));
    assert_eq!(config_only, flag_matches_config);
    assert_ne!(config_only, flag_differs);
}

#[test]
fn nested_cv_writes_one_row_per_fold_and_approach() {
    let dir = TempDir::new().unwrap();
    simulate_toy(dir.path(), "4");
    let config = serde_json::json!({
        "seed": 3,
        "nested_cv": {
            "data": dir.path().join("dataset.csv"),
            "approaches": ["acc"],
            "outer_folds": 2,
            "inner_folds": 2,
            "run": {"folds": 4, "k_max": 3, "stabsel_points": 2, "timings": false}
        }
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = bin()
        .args(["nested-cv", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "nested-cv failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("nested_cv.csv")).unwrap();
    assert_eq!(text.lines().count(), 3); // header + 2 outer folds
    assert!(text.starts_with("fold,approach,test_accuracy,n_selected,chosen_k"));
}
