//! End-to-end checks of the command-line binary: the staged pipeline, the
//! one-shot runner's reproducibility, and argument validation.

use std::path::Path;
use std::process::{Command, Output};

fn synthleak(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthleak"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let output = synthleak(dir, args);
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("utf-8 stdout")
}

#[test]
fn staged_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let stdout = run_ok(
        root,
        &[
            "gen-data",
            "--out-dir",
            "data",
            "--n-train",
            "2000",
            "--n-exclusive",
            "500",
            "--seed",
            "99",
        ],
    );
    assert!(stdout.contains("2000 training rows"), "unexpected: {stdout}");
    for file in ["schema.toml", "inclusive_2013.csv", "inclusive_2015.csv", "exclusive_2015.csv"]
    {
        assert!(root.join("data").join(file).exists(), "gen-data must write {file}");
    }

    let stdout = run_ok(
        root,
        &[
            "select-features",
            "--schema",
            "data/schema.toml",
            "--data",
            "data/inclusive_2013.csv",
            "--k",
            "6",
            "--out",
            "reduced.toml",
            "--ranking-out",
            "ranking.csv",
        ],
    );
    assert!(stdout.contains("kept unconditionally: gender, age_band, income_band"));
    assert!(root.join("reduced.toml").exists());
    let ranking = std::fs::read_to_string(root.join("ranking.csv")).unwrap();
    assert!(ranking.starts_with("rank,feature,chi2\n"));

    // the reduced schema projects the full CSV on load
    run_ok(
        root,
        &[
            "synth",
            "--schema",
            "reduced.toml",
            "--data",
            "data/inclusive_2013.csv",
            "--seed",
            "7",
            "--out",
            "synthetic.csv",
        ],
    );
    let synthetic = std::fs::read_to_string(root.join("synthetic.csv")).unwrap();
    assert_eq!(synthetic.lines().count(), 2001, "header plus one line per row");

    let stdout = run_ok(
        root,
        &[
            "train",
            "--schema",
            "reduced.toml",
            "--data",
            "data/inclusive_2013.csv",
            "--algorithm",
            "decision_tree",
            "--model-out",
            "model.json",
            "--marginals-out",
            "marginals.json",
        ],
    );
    assert!(stdout.contains("training accuracy"), "unexpected: {stdout}");

    let stdout = run_ok(
        root,
        &["evaluate", "--model", "model.json", "--test", "data/exclusive_2015.csv"],
    );
    assert!(stdout.contains("auc "), "unexpected: {stdout}");

    let stdout = run_ok(
        root,
        &[
            "attack",
            "--model",
            "model.json",
            "--marginals",
            "marginals.json",
            "--targets",
            "data/inclusive_2013.csv",
            "--sensitive",
            "gender",
            "--out",
            "predictions.csv",
        ],
    );
    assert!(stdout.contains("4000 queries"), "2 per target over 2000 targets: {stdout}");
    let predictions = std::fs::read_to_string(root.join("predictions.csv")).unwrap();
    assert!(predictions.starts_with("id,predicted,provenance,correct\n"));
    assert_eq!(predictions.lines().count(), 2001);

    let stdout = run_ok(
        root,
        &[
            "attack",
            "--model",
            "model.json",
            "--marginals",
            "marginals.json",
            "--targets",
            "data/inclusive_2013.csv",
            "--sensitive",
            "gender",
            "--marginals-only",
        ],
    );
    assert!(stdout.contains("0 queries"), "baseline must not query: {stdout}");
}

#[test]
fn run_all_is_reproducible_and_report_reemits() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("config.toml"),
        r#"
        n_train = 800
        n_exclusive = 300
        target_set_size = 200
        repetitions = 2
        k_features = 5
        classifiers = ["majority", "decision_tree"]
        sensitive_attributes = ["gender"]
        seed = 555
        "#,
    )
    .unwrap();

    for out in ["first", "second"] {
        run_ok(root, &["run-all", "--config", "config.toml", "--out-dir", out]);
    }
    let report_files = [
        "reports/utility.csv",
        "reports/case1_counts.csv",
        "reports/attack_metrics.csv",
        "reports/attack_raw.csv",
        "reports/summary.txt",
        "reports/manifest.json",
        "bundle.json",
        "data/synthetic_2013.csv",
        "released/original_model.json",
    ];
    for file in &report_files {
        let first = std::fs::read(root.join("first").join(file)).unwrap();
        let second = std::fs::read(root.join("second").join(file)).unwrap();
        assert_eq!(first, second, "{file} differs between identical runs");
    }

    // re-emitting from the saved bundle reproduces the report files too
    run_ok(root, &["report", "--bundle", "first/bundle.json", "--out-dir", "reemitted"]);
    for file in ["utility.csv", "case1_counts.csv", "summary.txt", "manifest.json"] {
        let original = std::fs::read(root.join("first/reports").join(file)).unwrap();
        let reemitted = std::fs::read(root.join("reemitted").join(file)).unwrap();
        assert_eq!(original, reemitted, "{file} changed on re-emit");
    }
}

#[test]
fn bad_arguments_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let output = synthleak(root, &["no-such-command"]);
    assert!(!output.status.success());

    let output = synthleak(root, &["gen-data"]); // missing --out-dir
    assert!(!output.status.success());

    let output = synthleak(
        root,
        &[
            "train",
            "--schema",
            "missing.toml",
            "--data",
            "missing.csv",
            "--algorithm",
            "gradient_boosting", // not an implemented algorithm
            "--model-out",
            "model.json",
        ],
    );
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("gradient_boosting"), "should name the bad value: {stderr}");

    let output = synthleak(
        root,
        &["evaluate", "--model", "does-not-exist.json", "--test", "also-missing.csv"],
    );
    assert!(!output.status.success());
}
