//! End-to-end CLI checks: exit codes, output determinism (acceptance
//! criterion 10), and definitional agreement between subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sarmanov-risk")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    cmd.env_remove("SARMANOV_RISK_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

const FGM_MODEL: &str = r#"{
    "F": {"family": "pareto", "params": {"alpha": 2.0, "xm": 1.0}},
    "G": {"family": "uniform01"},
    "kernel": "fgm",
    "theta": 0.5
}"#;

fn model_json(theta: f64) -> String {
    FGM_MODEL.replace("0.5", &theta.to_string())
}

#[test]
fn validate_passes_for_valid_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "validate.json",
        &format!(r#"{{"model": {}, "seed": 1}}"#, model_json(0.5)),
    );
    let out = run(
        &[
            "validate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"model_valid\": true"));
}

#[test]
fn validate_fails_with_exit_2_naming_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "validate.json",
        &format!(r#"{{"model": {}, "seed": 1}}"#, model_json(1.5)),
    );
    let out = run(
        &[
            "validate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("factor_nonneg"));
    assert!(stdout.contains("\"pass\": false"));
}

#[test]
fn malformed_json_exits_1_with_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"model\": {,\n}");
    let out = run(&["validate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
    assert!(stderr.contains("column"), "stderr: {stderr}");
}

#[test]
fn empty_x_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ruin.json",
        &format!(
            r#"{{"model": {}, "seed": 3, "x_grid": [], "horizon": {{"finite": 2}},
                "samples": 2000, "alpha": 2.0}}"#,
            model_json(0.5)
        ),
    );
    let out = run(&["ruin", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn zero_beta_max_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.json",
        &format!(
            r#"{{"model": {}, "seed": 3, "alpha": 2.0, "beta_max": 0.0}}"#,
            model_json(0.0)
        ),
    );
    let out = run(&["mellin-scan", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn counterexample_rejects_bad_amplitudes_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ce.json",
        r#"{"seed": 5, "a": 0.7, "b": 0.5}"#,
    );
    let out = run(&["counterexample", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn unjustifiable_truncation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // E[Y^g] > 1 for every g in (0, 1]: no moment bound can truncate.
    let model = r#"{
        "F": {"family": "pareto", "params": {"alpha": 2.0, "xm": 1.0}},
        "G": {"family": "two_atom", "params": {"y1": 0.5, "p1": 0.1, "y2": 4.0}},
        "kernel": "fgm",
        "theta": 0.0
    }"#;
    let cfg = write_config(
        dir.path(),
        "ruin.json",
        &format!(
            r#"{{"model": {model}, "seed": 3, "x_grid": [10.0], "horizon": "infinite",
                "samples": 2000, "alpha": 2.0}}"#
        ),
    );
    let out = run(&["ruin", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn ruin_horizon_one_agrees_with_product_tail_on_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let ruin_cfg = write_config(
        dir.path(),
        "ruin.json",
        &format!(
            r#"{{"model": {}, "seed": 11, "x_grid": [2.0, 5.0], "horizon": {{"finite": 1}},
                "samples": 20000, "alpha": 2.0}}"#,
            model_json(0.5)
        ),
    );
    let pt_cfg = write_config(
        dir.path(),
        "pt.json",
        &format!(
            r#"{{"model": {}, "seed": 11, "x_grid": [2.0, 5.0],
                "samples": 20000, "alpha": 2.0, "method": "both"}}"#,
            model_json(0.5)
        ),
    );
    let out_ruin = dir.path().join("out-ruin");
    let out_pt = dir.path().join("out-pt");
    let r = run(
        &[
            "ruin",
            "--config",
            ruin_cfg.to_str().unwrap(),
            "--out",
            out_ruin.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(0), "{r:?}");
    let p = run(
        &[
            "product-tail",
            "--config",
            pt_cfg.to_str().unwrap(),
            "--out",
            out_pt.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(p.status.code(), Some(0), "{p:?}");

    let ruin_csv = fs::read_to_string(out_ruin.join("ruin.csv")).unwrap();
    let pt_csv = fs::read_to_string(out_pt.join("product-tail.csv")).unwrap();
    let p_hat_ruin: Vec<&str> = ruin_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    let p_mc: Vec<&str> = pt_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(p_hat_ruin, p_mc, "n = 1 ruin must equal the product-tail MC");
}

/// Acceptance criterion 10: rerunning any command with the same config and
/// seed produces byte-identical CSV/JSON outputs, including under a
/// different worker count.
#[test]
fn acceptance_10_byte_identical_reruns() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let ce_cfg = write_config(
        dir.path(),
        "ce.json",
        r#"{"seed": 7, "x_grid": {"start": 100.0, "stop": 10000.0, "points": 31}}"#,
    );
    let ruin_cfg = write_config(
        dir.path(),
        "ruin.json",
        &format!(
            r#"{{"model": {}, "seed": 21, "x_grid": [2.0, 10.0], "horizon": {{"finite": 3}},
                "samples": 50000, "alpha": 2.0}}"#,
            model_json(0.5)
        ),
    );
    let scan_cfg = write_config(
        dir.path(),
        "scan.json",
        &format!(
            r#"{{"model": {}, "seed": 9, "alpha": 2.0, "beta_max": 50.0, "resolution": 100}}"#,
            model_json(0.0)
        ),
    );

    let mut all_identical = true;
    let mut detail = String::new();
    for (cmd, cfg, files) in [
        ("counterexample", &ce_cfg, vec!["counterexample.csv", "counterexample.json"]),
        ("ruin", &ruin_cfg, vec!["ruin.csv", "ruin.json"]),
        ("mellin-scan", &scan_cfg, vec!["mellin-scan.csv", "mellin-scan.json"]),
    ] {
        let out_a = dir.path().join(format!("{cmd}-a"));
        let out_b = dir.path().join(format!("{cmd}-b"));
        let a = run(
            &["--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap(), cmd],
            &[],
        );
        assert_eq!(a.status.code(), Some(0), "{a:?}");
        // Second run under an explicit single-worker pool via the env var.
        let b = run(
            &["--config", cfg.to_str().unwrap(), "--out", out_b.to_str().unwrap(), cmd],
            &[("SARMANOV_RISK_WORKERS", "1")],
        );
        assert_eq!(b.status.code(), Some(0), "{b:?}");
        assert!(
            String::from_utf8_lossy(&b.stderr).contains("SARMANOV_RISK_WORKERS"),
            "worker override must be recorded on stderr"
        );
        for file in files {
            let bytes_a = fs::read(out_a.join(file)).unwrap();
            let bytes_b = fs::read(out_b.join(file)).unwrap();
            let same = bytes_a == bytes_b;
            all_identical &= same;
            detail.push_str(&format!("{cmd}/{file}: {} ", if same { "ok" } else { "DIFFERS" }));
        }
    }
    println!(
        "ACCEPTANCE 10 [{}] byte-identical reruns — {detail}({:.1}s)",
        if all_identical { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(all_identical, "{detail}");
}

#[test]
fn hill_and_tail_ratio_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let hill_cfg = write_config(
        dir.path(),
        "hill.json",
        r#"{
            "law": {"family": "pareto", "params": {"alpha": 2.0, "xm": 1.0}},
            "seed": 13, "samples": 20000, "k": 200,
            "k_sweep": [50, 100, 200, 400]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "hill",
            "--config",
            hill_cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(out_dir.join("hill.csv")).unwrap();
    assert!(csv.starts_with("k,alpha_hat,std_error,sample_size"));
    assert_eq!(csv.lines().count(), 5);

    let tr_cfg = write_config(
        dir.path(),
        "tr.json",
        r#"{
            "law": {"family": "oscillating_pareto",
                    "params": {"alpha": 2.0, "beta0": 3.141592653589793, "a": 0.5, "b": 0.3}},
            "seed": 17,
            "x_grid": {"start": 10.0, "stop": 10000.0, "points": 200}
        }"#,
    );
    let out = run(
        &[
            "tail-ratio",
            "--config",
            tr_cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let json = fs::read_to_string(out_dir.join("tail-ratio.json")).unwrap();
    assert!(json.contains("oscillating"), "verdict missing: {json}");
    assert!(json.contains("in_d"), "dv verdict missing: {json}");
}

#[test]
fn mellin_scan_reports_constructed_zeros() {
    let dir = tempfile::tempdir().unwrap();
    // Two-atom G with the vanishing transform at beta = pi (theta = 0).
    let e = std::f64::consts::E;
    let p1 = e * e / (1.0 + e * e);
    let model = format!(
        r#"{{
            "F": {{"family": "pareto", "params": {{"alpha": 2.0, "xm": 1.0}}}},
            "G": {{"family": "two_atom", "params": {{"y1": 1.0, "p1": {p1}, "y2": {e}}}}},
            "kernel": "fgm",
            "theta": 0.0
        }}"#
    );
    let cfg = write_config(
        dir.path(),
        "scan.json",
        &format!(r#"{{"model": {model}, "seed": 3, "alpha": 2.0, "beta_max": 10.0, "resolution": 200}}"#),
    );
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "mellin-scan",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let json = fs::read_to_string(out_dir.join("mellin-scan.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let zeros = parsed["results"]["zeros"].as_array().unwrap();
    let pi = std::f64::consts::PI;
    let found_pos = zeros
        .iter()
        .any(|z| (z["beta"].as_f64().unwrap() - pi).abs() < 1e-6);
    let found_neg = zeros
        .iter()
        .any(|z| (z["beta"].as_f64().unwrap() + pi).abs() < 1e-6);
    assert!(found_pos && found_neg, "zeros: {zeros:?}");
    // The uniform marginal, by contrast, reports no zeros.
    let cfg_u = write_config(
        dir.path(),
        "scan-u.json",
        &format!(
            r#"{{"model": {}, "seed": 3, "alpha": 2.0, "beta_max": 50.0, "resolution": 200}}"#,
            model_json(0.0)
        ),
    );
    let out = run(
        &[
            "mellin-scan",
            "--config",
            cfg_u.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let json = fs::read_to_string(out_dir.join("mellin-scan.json")).unwrap();
    assert!(json.contains("zeros: none (grid-relative"), "{json}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ruin.json",
        &format!(
            r#"{{"model": {}, "seed": 100, "x_grid": [3.0], "horizon": {{"finite": 2}},
                "samples": 5000, "alpha": 2.0}}"#,
            model_json(0.5)
        ),
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = run(
        &["ruin", "--config", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()],
        &[],
    );
    let b = run(
        &[
            "ruin",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "100",
            "--out",
            out_b.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let csv_a = fs::read(out_a.join("ruin.csv")).unwrap();
    let csv_b = fs::read(out_b.join("ruin.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "--seed equal to the config seed must not change bytes");
}
