use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sinhrobin::output::parse_csv;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sinhrobin"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn small(extra: &str) -> String {
    format!(
        "lambda = [10.0]\neps = [1e-3]\n{extra}\n[grid]\nn_radial = 32\nn_angular = 64\n[concentration]\nmass_rule = \"spin_product\"\ngreen = \"series\"\n"
    )
}

fn sweep_config(workers: usize) -> String {
    format!(
        "lambda = [10.0, 20.0]\neps = [1e-3, 5e-4]\nworkers = {workers}\n[grid]\nn_radial = 48\nn_angular = 192\n[concentration]\nspins = [1]\nmass_rule = \"spin_product\"\ngreen = \"series\"\n"
    )
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn theta0_writes_json_with_metadata() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["theta0"], "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/theta0.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let theta0 = v["data"]["theta0"].as_f64().unwrap();
    assert!((theta0 - 0.305_028_9).abs() < 1e-6, "{theta0}");
    assert!(v["data"]["h_second"].as_f64().unwrap() > 0.0);
    let meta = &v["metadata"];
    assert_eq!(meta["command"], "theta0");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!((meta["c_gamma"].as_f64().unwrap() + 4.0).abs() < 1e-8);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn zero_spin_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["solve"], "[concentration]\nspins = [1, 0]\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spin must be ±1"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_and_missing_configs_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["theta0"], "[grid]\nn_radial = \"many\"\n");
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_sinhrobin"))
        .args(["theta0", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.toml"));
}

#[test]
fn out_of_regime_pairs_need_the_flag() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["ansatz-check"], "eps = [0.01]\nlambda = [40.0]\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("regime"), "{}", stderr(&o));
}

#[test]
fn newton_failure_exits_with_numerical_code() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["solve"], &small("[newton]\nmax_iter = 1"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("max_iterations"), "{}", stderr(&o));
    // the failed solve is still reported
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/solve_0_0.json")).unwrap()).unwrap();
    assert_eq!(report["data"]["status"], "max_iterations");
}

#[test]
fn sweep_over_two_eps_and_two_lambda_converges() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["sweep"], &sweep_config(2));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, rows) = parse_csv(&fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap());
    assert!(meta.iter().any(|(k, _)| k == "config_hash"));
    let header = &rows[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        assert_eq!(r[col("converged")], "true", "{r:?}");
        let gap: f64 = r[col("energy_gap")].parse().unwrap();
        assert!(gap < 0.2, "{r:?}");
        let ld: f64 = r[col("lambda_d_peaks")].parse().unwrap();
        assert!(ld > 0.0 && ld < 1.0, "{r:?}");
    }
    // smaller ε concentrates more at fixed λ
    let sup = |i: usize| rows[i][col("sup_abs_u")].parse::<f64>().unwrap();
    assert!(sup(2) > sup(1) && sup(4) > sup(3));
}

#[test]
fn reruns_are_byte_identical_and_workers_do_not_change_results() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    assert_eq!(run(a.path(), &["sweep"], &sweep_config(2)).status.code(), Some(0));
    assert_eq!(run(b.path(), &["sweep"], &sweep_config(2)).status.code(), Some(0));
    assert_eq!(run(c.path(), &["sweep"], &sweep_config(1)).status.code(), Some(0));
    let read = |d: &TempDir| fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    // the worker count enters the configuration hash only
    assert_eq!(parse_csv(&read(&a)).1, parse_csv(&read(&c)).1);
}

#[test]
fn every_subcommand_writes_headed_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = small("probes = [[0.5, 0.1], [-0.3, 0.6]]");
    for cmd in ["green-table", "robin-profile", "hamiltonian-min", "ansatz-check", "solve"] {
        let o = run(dir.path(), &[cmd, "--seed", "11"], &cfg);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let files = String::from_utf8(o.stdout).unwrap();
        assert!(!files.trim().is_empty(), "{cmd}");
        for f in files.lines() {
            let text = fs::read_to_string(f).unwrap();
            if f.ends_with(".csv") {
                let (meta, rows) = parse_csv(&text);
                assert!(meta.contains(&("command".to_string(), cmd.to_string())), "{f}");
                assert!(meta.contains(&("seed".to_string(), "11".to_string())), "{f}");
                assert!(rows.len() >= 2, "{f}");
            } else {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["metadata"]["command"], cmd);
                assert_eq!(v["metadata"]["seed"], 11);
            }
        }
    }
}

#[test]
fn hamiltonian_min_reports_the_boundary_gap() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["hamiltonian-min"], &small(""));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/hamiltonian_min.json")).unwrap()).unwrap();
    let d = &v["data"][0];
    assert_eq!(d["gap_exceeds_minimum"], true, "{d}");
    assert!(d["boundary_gap_min"].as_f64().unwrap() > d["phi"].as_f64().unwrap());
}
