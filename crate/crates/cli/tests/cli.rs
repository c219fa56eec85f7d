use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const KO: &str = r#"{"kim_omberg": {"r": 0.0168, "sigma_S": 0.151, "kappa": 0.271, "F_bar": 0.041, "sigma_F": 0.0343, "rho": 0.0}}"#;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn smallcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallcost")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    smallcost(&args)
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

/// Rows of a CSV after the comment line, keyed by the header.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        &format!(r#"{{"command": "ntregion", "model": {KO}, "preferences": {{"gamma": 3.0, "horizon_T": 40.0}}, "costs": {{"lambda_p": 0.01}}, "numerics": {{"pionts": 11}}}}"#),
    );
    let o = run("ntregion", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pionts"));
}

#[test]
fn empty_config_prints_usage() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "empty.json", "  \n");
    let o = run("solve", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_config_and_wrong_command_fail() {
    let dir = TempDir::new().unwrap();
    let o = run("solve", &dir.path().join("none.json"), dir.path(), &[]);
    assert!(!o.status.success());
    let o = run("solve", &configs_dir().join("fig2.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = configs_dir().join("fig1_left.json");
    ok(&run("simulate", &cfg, a.path(), &["--seed", "7"]));
    ok(&run("simulate", &cfg, b.path(), &["--seed", "7"]));
    for name in ["fig1_left.csv", "fig1_left_stats.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = TempDir::new().unwrap();
    ok(&run("simulate", &cfg, c.path(), &["--seed", "8"]));
    assert_ne!(std::fs::read(a.path().join("fig1_left.csv")).unwrap(), std::fs::read(c.path().join("fig1_left.csv")).unwrap());
}

#[test]
fn csv_starts_with_hash_and_header() {
    let dir = TempDir::new().unwrap();
    let cfg = configs_dir().join("fig2.json");
    ok(&run("ntregion", &cfg, dir.path(), &[]));
    let text = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    let mut lines = text.lines();
    let hash = smallcost_cli::config::sha256_hex(&std::fs::read(&cfg).unwrap());
    assert_eq!(lines.next().unwrap(), format!("# config_sha256={hash}"));
    assert_eq!(lines.next().unwrap(), "lambda,f,pi,pi_f,halfwidth,lower,upper");
}

#[test]
fn prohibitive_costs_never_trade() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "huge.json",
        &format!(
            r#"{{"command": "simulate", "model": {KO}, "preferences": {{"gamma": 3.0, "horizon_T": 40.0}}, "costs": {{"lambda_p": 0.99}}, "numerics": {{"paths": {{"seed": 3, "dt": 0.01, "T": 5.0, "n_paths": 4}}}}}}"#
        ),
    );
    ok(&run("simulate", &cfg, dir.path(), &[]));
    let (h, rows) = read_csv(&dir.path().join("huge.csv"));
    let (l, m) = (col(&h, "L"), col(&h, "M"));
    assert!(rows.iter().all(|r| r[l] == 0.0 && r[m] == 0.0));
}

#[test]
fn black_scholes_region_vanishes_at_anchors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bs.json",
        r#"{"command": "ntregion", "model": {"black_scholes": {"r": 0.0168, "mu": 0.041, "sigma": 0.151}}, "preferences": {"gamma": 3.0}, "costs": {"lambda_p": 0.01}, "numerics": {"pi_range": [-1.0, 1.0], "points": 3}}"#,
    );
    ok(&run("ntregion", &cfg, dir.path(), &[]));
    let (h, rows) = read_csv(&dir.path().join("bs.csv"));
    let (pi, hw) = (col(&h, "pi"), col(&h, "halfwidth"));
    for r in &rows {
        if r[pi] == 0.0 || r[pi] == 1.0 {
            assert_eq!(r[hw], 0.0);
        } else {
            assert!(r[hw] > 0.0);
        }
    }
}

#[test]
fn kim_omberg_region_stays_open_near_anchors() {
    let dir = TempDir::new().unwrap();
    ok(&run("ntregion", &configs_dir().join("fig2.json"), dir.path(), &[]));
    let (h, rows) = read_csv(&dir.path().join("fig2.csv"));
    let (pi, hw) = (col(&h, "pi"), col(&h, "halfwidth"));
    for target in [0.0, 1.0] {
        let near = rows.iter().min_by(|a, b| (a[pi] - target).abs().total_cmp(&(b[pi] - target).abs())).unwrap();
        assert!(near[hw] > 0.01, "halfwidth {} at pi {}", near[hw], near[pi]);
    }
}

#[test]
fn welfare_report_scales_with_cost() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "w.json",
        &format!(
            r#"{{"command": "welfare", "model": {KO}, "preferences": {{"gamma": 3.0, "horizon_T": 10.0}}, "numerics": {{"lambdas": [0.0, 0.001, 0.01], "paths": {{"seed": 1, "dt": 0.05, "T": 10.0, "n_paths": 20}}}}}}"#
        ),
    );
    ok(&run("welfare", &cfg, dir.path(), &[]));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["ko_delta_esr"], 0.0);
    assert_eq!(rows[0]["bs_delta_esr"], 0.0);
    assert_eq!(rows[0]["cel"], 0.0);
    assert!(rows[0]["ko_per_lambda_two_thirds"].is_null());
    for key in ["ko_per_lambda_two_thirds", "bs_per_lambda_two_thirds"] {
        let (a, b) = (rows[1][key].as_f64().unwrap(), rows[2][key].as_f64().unwrap());
        assert!((a / b - 1.0).abs() < 1e-12, "{key}: {a} vs {b}");
    }
    assert!(rows[2]["ko_delta_esr"].as_f64().unwrap() > rows[2]["bs_delta_esr"].as_f64().unwrap());
}

#[test]
fn convergence_table_reaches_horizon() {
    let dir = TempDir::new().unwrap();
    ok(&run("convergence", &configs_dir().join("fig3.json"), dir.path(), &[]));
    let (h, rows) = read_csv(&dir.path().join("fig3.csv"));
    let (t, pi, pi_bar, hw, hw_bar) =
        (col(&h, "t"), col(&h, "pi"), col(&h, "pi_bar"), col(&h, "halfwidth"), col(&h, "halfwidth_bar"));
    assert_eq!(rows.len(), 161);
    assert_eq!(rows.last().unwrap()[t], 40.0);
    assert!(rows.iter().all(|r| r[pi_bar] == rows[0][pi_bar] && r[hw_bar] == rows[0][hw_bar]));
    // Far from the horizon the weights sit at their stationary values.
    assert!((rows[0][pi] - rows[0][pi_bar]).abs() < 1e-3);
    assert!((rows[0][hw] / rows[0][hw_bar] - 1.0).abs() < 1e-2);
}

#[test]
fn reference_solve_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = run("solve", &configs_dir().join("solve_1d_reference.json"), dir.path(), &[]);
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("closed form"), "{stdout}");
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solve_1d_reference.json")).unwrap()).unwrap();
    let dev = v["closed_form"]["halfwidth_relative_deviation"].as_f64().unwrap();
    assert!(dev.abs() < 0.02, "{dev}");
    let (h, rows) = read_csv(&dir.path().join("solve_1d_reference_mask.csv"));
    assert_eq!(h, ["xi_1", "policy_code"]);
    assert_eq!(rows.len(), 501);
}
