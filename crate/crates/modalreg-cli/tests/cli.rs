//! End-to-end checks of the command-line interface: format contracts,
//! determinism, round-tripping, and error reporting.

use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;
use predicates::prelude::*;
use tempfile::TempDir;

fn cmd() -> Command {
    Command::cargo_bin("modalreg").unwrap()
}

fn write_two_band_spec(dir: &Path) -> PathBuf {
    let path = dir.join("two_band.json");
    fs::write(
        &path,
        r#"{
  "components": [
    { "weight": 0.5, "mean": { "kind": "const", "value": -2.0 }, "sd": 0.5 },
    { "weight": 0.5, "mean": { "kind": "const", "value": 2.0 }, "sd": 0.5 }
  ],
  "x_range": [0.0, 1.0]
}"#,
    )
    .unwrap();
    path
}

fn gen_data(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let spec = write_two_band_spec(dir);
    let data = dir.join("data.csv");
    cmd()
        .args(["gen", "--spec"])
        .arg(&spec)
        .args(["--n", &n.to_string(), "--seed", &seed.to_string(), "--out"])
        .arg(&data)
        .assert()
        .success();
    data
}

/// Re-serialize every numeric field with the CLI's own 17-significant-digit
/// rule; the round trip must be byte-identical.
fn roundtrip_csv(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let mut out = String::new();
    out.push_str(lines.next().unwrap());
    out.push('\n');
    for line in lines {
        let fields: Vec<String> = line
            .split(',')
            .map(|field| {
                if field.is_empty() || field.chars().all(|c| c.is_ascii_digit()) {
                    field.to_string()
                } else {
                    format!("{:.16e}", field.parse::<f64>().unwrap())
                }
            })
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn gen_then_fit_format_contract() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 200, 7);

    let header = fs::read_to_string(&data).unwrap();
    assert!(header.starts_with("x1,y\n"));

    let modes = dir.path().join("modes.csv");
    let assert = cmd()
        .args(["fit", "--data"])
        .arg(&data)
        .args(["--h", "0.3", "--mesh", "40", "--trim", "0.05", "--out"])
        .arg(&modes)
        .assert()
        .success();
    let stdout = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(summary["k_hat"].as_u64().unwrap() >= 2);
    assert_eq!(summary["n_mesh"], 40);

    let text = fs::read_to_string(&modes).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mesh_index,x1,y,p_yy,label"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[0], "0");
    first[1].parse::<f64>().unwrap();
    let p_yy: f64 = first[3].parse().unwrap();
    assert!(p_yy < 0.0, "mode curvature must be negative, got {p_yy}");
    first[4].parse::<usize>().unwrap();
}

#[test]
fn outputs_roundtrip_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 150, 11);
    let modes = dir.path().join("modes.csv");
    cmd()
        .args(["fit", "--data"])
        .arg(&data)
        .args(["--h", "0.3", "--mesh", "25", "--out"])
        .arg(&modes)
        .assert()
        .success();
    for path in [&data, &modes] {
        let original = fs::read_to_string(path).unwrap();
        assert_eq!(roundtrip_csv(path), original, "{} does not round-trip", path.display());
    }
}

#[test]
fn select_h_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 120, 3);
    let run = |out: &Path| {
        let assert = cmd()
            .args(["select-h", "--data"])
            .arg(&data)
            .args([
                "--alpha", "0.1", "--seed", "1", "--grid-min", "0.2", "--grid-max", "0.5",
                "--grid-size", "3", "--out",
            ])
            .arg(out)
            .assert()
            .success();
        String::from_utf8(assert.get_output().stdout.clone()).unwrap()
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let out_a = run(&a);
    let out_b = run(&b);
    assert_eq!(out_a, out_b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn fit_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 150, 5);
    let run = |threads: &str, out: &Path| {
        cmd()
            .args(["fit", "--data"])
            .arg(&data)
            .args(["--h", "0.3", "--mesh", "30", "--threads", threads, "--out"])
            .arg(out)
            .assert()
            .success();
    };
    let (a, b) = (dir.path().join("t1.csv"), dir.path().join("t8.csv"));
    run("1", &a);
    run("8", &b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn predict_epsilon_matches_residual_order_statistic() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 140, 9);
    let residuals = dir.path().join("resid.csv");
    let assert = cmd()
        .args(["predict", "--data"])
        .arg(&data)
        .args(["--h", "0.3", "--alpha", "0.05", "--mesh", "30", "--residuals"])
        .arg(&residuals)
        .assert()
        .success();
    let stdout = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let epsilon = summary["epsilon"].as_f64().unwrap();

    // independent recomputation: ceil(0.95 n)-th order statistic
    let text = fs::read_to_string(&residuals).unwrap();
    let mut res: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    res.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (0.95 * res.len() as f64).ceil() as usize;
    let expect = res[rank - 1];
    assert_eq!(epsilon, expect, "epsilon {epsilon} != order statistic {expect}");
}

#[test]
fn confidence_emits_band_and_header() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 120, 13);
    let band = dir.path().join("band.csv");
    let header = dir.path().join("band.json");
    cmd()
        .args(["confidence", "--data"])
        .arg(&data)
        .args([
            "--h", "0.3", "--kind", "uniform", "--alpha", "0.1", "--b", "25", "--seed", "2",
            "--mesh", "15", "--trim", "0.05", "--out",
        ])
        .arg(&band)
        .arg("--header")
        .arg(&header)
        .assert()
        .success();
    let text = fs::read_to_string(&band).unwrap();
    assert!(text.starts_with("mesh_index,x1,delta\n"));
    assert_eq!(text.lines().count(), 16);
    // uniform band: one shared width on every row
    let deltas: Vec<&str> =
        text.lines().skip(1).map(|line| line.split(',').nth(2).unwrap()).collect();
    assert!(deltas.iter().all(|&d| d == deltas[0]));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&header).unwrap()).unwrap();
    assert_eq!(meta["kind"], "uniform");
    assert_eq!(meta["b"], 25);
    assert_eq!(meta["seed"], 2);
}

#[test]
fn cluster_preserves_row_order_and_proportions() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 160, 17);
    let out = dir.path().join("clusters.csv");
    let assert = cmd()
        .args(["cluster", "--data"])
        .arg(&data)
        .args(["--h", "0.3", "--out"])
        .arg(&out)
        .assert()
        .success();
    let stdout = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let clusters = summary["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 2);
    let total: f64 = clusters.iter().map(|c| c["proportion"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    // output rows keep the input order: x column must match the data file
    let input: Vec<String> = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .map(|line| line.split(',').next().unwrap().to_string())
        .collect();
    let output: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(input, output);
}

#[test]
fn malformed_csv_reports_parse_error_json() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,y\n0.5,oops\n").unwrap();
    let out = dir.path().join("x.csv");
    let assert = cmd()
        .args(["fit", "--data"])
        .arg(&bad)
        .args(["--h", "0.3", "--mesh", "5", "--out"])
        .arg(&out)
        .assert()
        .failure();
    let stderr = String::from_utf8(assert.get_output().stderr.clone()).unwrap();
    let report: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(report["error"]["kind"], "parse");
    let message = report["error"]["message"].as_str().unwrap();
    assert!(message.contains("row 1"), "message should locate the bad cell: {message}");
    assert!(message.contains("column y"), "message should name the column: {message}");
}

#[test]
fn ragged_row_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("ragged.csv");
    fs::write(&bad, "x1,y\n0.5,1.0\n0.6\n").unwrap();
    let out = dir.path().join("x.csv");
    let assert = cmd()
        .args(["fit", "--data"])
        .arg(&bad)
        .args(["--h", "0.3", "--mesh", "5", "--out"])
        .arg(&out)
        .assert()
        .failure();
    let stderr = String::from_utf8(assert.get_output().stderr.clone()).unwrap();
    let report: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(report["error"]["kind"], "parse");
}

#[test]
fn missing_seed_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let spec = write_two_band_spec(dir.path());
    let out = dir.path().join("d.csv");
    cmd()
        .args(["gen", "--spec"])
        .arg(&spec)
        .args(["--n", "10", "--out"])
        .arg(&out)
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--seed"));
}

#[test]
fn help_lists_flags_on_every_subcommand() {
    for sub in ["gen", "fit", "confidence", "predict", "select-h", "cluster", "ridge-check"] {
        cmd()
            .args([sub, "--help"])
            .assert()
            .success()
            .stdout(predicate::str::contains("--threads"));
    }
    cmd().args(["experiment", "rate", "--help"]).assert().success();
    cmd().args(["experiment", "coverage", "--help"]).assert().success();
}

#[test]
fn ridge_check_emits_report() {
    let dir = TempDir::new().unwrap();
    let data = gen_data(dir.path(), 120, 21);
    let out = dir.path().join("ridge.csv");
    let assert = cmd()
        .args(["ridge-check", "--data"])
        .arg(&data)
        .args(["--h", "0.3", "--mesh", "10", "--trim", "0.1", "--out"])
        .arg(&out)
        .assert()
        .success();
    let stdout = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(summary["n_points"].as_u64().unwrap() >= 10);
    assert_eq!(summary["all_lambda2_negative"], true);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x1,y,alignment,curvature,zero_px,zero_pxy,member,isotropic\n"));
}
