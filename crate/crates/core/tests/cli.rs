//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fbqos"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn data_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const SMALL: &str = "blocklength = 100\n[mc]\nsamples = 2000\nseed = 3\n";

#[test]
fn exponent_curve_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["exponent-curve"], Some(&cfg));
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 10);
    let exact: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(exact.windows(2).all(|w| w[1] <= w[0] + 1e-6));
}

#[test]
fn ec_surface_shape() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}[grids]\ntheta_delay = [0.001, 0.003, 0.01, 0.03, 0.1]\ntheta_err = [0.01, 0.02, 0.04, 0.08, 0.16]\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out = run(&["ec-surface"], Some(&cfg));
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.iter().filter(|r| r[0] == "surface").count(), 25);
    let ridge: Vec<f64> = rows.iter().filter(|r| r[0] == "ridge").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(ridge.len(), 5);
    assert!(ridge.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn tradeoff_shape_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["tradeoff"], Some(&cfg));
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let t: f64 = r[1].parse().unwrap();
        assert!(t.is_finite() && t > 0.0);
    }
    let eps = run(&["tradeoff", "--sweep", "eps"], Some(&cfg));
    assert!(eps.status.success());
    assert!(String::from_utf8_lossy(&eps.stdout).contains("error_prob,theta_delay,theta_err_opt"));
}

#[test]
fn pareto_reports_levels_and_rejects_nonnegative_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[grids]\nlevels = [-2.0, -1.0]\n"));
    let out = run(&["pareto"], Some(&cfg));
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert!(rows.iter().any(|r| r[0].starts_with("-2")) && rows.iter().any(|r| r[0].starts_with("-1")));

    let bad = write_config(dir.path(), &format!("{SMALL}[grids]\nlevels = [0.0]\n"));
    assert_eq!(run(&["pareto"], Some(&bad)).status.code(), Some(2));
}

#[test]
fn pareto_unreachable_level_gives_header_and_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[grids]\nlevels = [-1000.0]\ntheta_delay = [0.001, 0.01]\n");
    let out = run(&["pareto"], Some(&write_config(dir.path(), &text)));
    assert!(out.status.success());
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("# diagnostic: level") && s.contains("empty boundary"));
    assert!(data_rows(&out).is_empty());
    assert!(s.contains("level,theta_delay,theta_err"));
}

#[test]
fn queue_validate_with_zero_arrivals() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[queue]\narrival_bits = 0.0\nblocks = 5000\nreplications = 1\n");
    let out = run(&["queue-validate"], Some(&write_config(dir.path(), &text)));
    assert!(out.status.success());
    let rows = data_rows(&out);
    for r in rows.iter().filter(|r| r[0] == "tail") {
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("no exponent fitted"));
}

#[test]
fn rate_curve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[grids]\nblocklengths = [100, 400]\nerror_probs = [0.01, 0.1]\n");
    let out = run(&["rate-curve"], Some(&write_config(dir.path(), &text)));
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "n");
    assert_eq!(rows[3][0], "eps");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), &format!("{SMALL}[grids]\nrates = []\n"));
    assert_eq!(run(&["exponent-curve"], Some(&empty)).status.code(), Some(2));
    let unknown = write_config(dir.path(), "blocklength = 100\nbogus = 1\n");
    let out = run(&["rate-curve"], Some(&unknown));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let infeasible = write_config(dir.path(), &format!("{SMALL}[grids]\nerror_probs = [1e-9]\n"));
    assert_eq!(run(&["rate-curve"], Some(&infeasible)).status.code(), Some(4));
    assert_eq!(run(&["rate-curve", "--config", "/nonexistent.toml"], None).status.code(), Some(2));
}

#[test]
fn header_records_provenance_and_json_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["rate-curve", "--seed", "12", "--samples", "500"], Some(&cfg));
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("# seed: 12") && s.contains("# samples: 500") && s.contains("# config_sha256: "));
    let json = run(&["rate-curve", "--format", "json"], Some(&cfg));
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["provenance"]["seed"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
}
