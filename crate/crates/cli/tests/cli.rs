use std::path::Path;
use std::process::{Command, Output};

fn moran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moran"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_with(dir: &Path, cmd: &str, body: &str) -> Output {
    let cfg = write_config(dir, body);
    let out = dir.join("out");
    moran(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()])
}

#[test]
fn missing_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "ode",
        r#"{"model": {"N": 100, "s": 1, "u": 0.5}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nu0"), "{stderr}");
}

#[test]
fn unknown_key_and_zero_paths_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "simulate",
        r#"{"model": {"N": 100, "s": 1, "u": 0.5, "nu0": 0.5}, "simulate": {"n_paths": 0}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run_with(
        dir.path(),
        "simulate",
        r#"{"model": {"N": 100, "s": 1, "u": 0.5, "nu0": 0.5}, "bogus": true}"#,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn neutral_ode_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "ode",
        r#"{"model": {"N": 10, "s": 0, "u": 0, "nu0": 0.5}, "ode": {"z0": 0.37, "t_end": 2}}"#,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/ode_trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z_closed,z_oracle,abs_diff"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 201);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], "0.37");
        assert_eq!(cols[2], "0.37");
    }
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/ode_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["result"]["regime"], "NEUTRAL");
    assert!(report["result"]["equilibria"].is_null());
}

#[test]
fn selection_ode_reports_small_difference() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "ode",
        r#"{"model": {"N": 10, "s": 1, "u": 0.5, "nu0": 0.5}}"#,
    );
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/ode_report.json")).unwrap(),
    )
    .unwrap();
    assert!(report["result"]["max_abs_diff"].as_f64().unwrap() < 1e-6);
    assert_eq!(
        report["result"]["equilibria"]["stability_plus"],
        "asymptotically_stable"
    );
    assert_eq!(report["config"]["model"]["nu0"], 0.5);
    assert_eq!(report["schema_version"], "moran-experiment/1");
}

#[test]
fn stationary_without_mutation_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "stationary",
        r#"{"model": {"N": 50, "s": 1, "u": 0, "nu0": 0.5}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported model"));
}

#[test]
fn stationary_csv_has_n_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "stationary",
        r#"{"model": {"N": 50, "s": 1, "u": 0.5, "nu0": 0.5}, "stationary": {"sizes": [50, 80]}}"#,
    );
    assert!(out.status.success());
    for n in [50usize, 80] {
        let csv =
            std::fs::read_to_string(dir.path().join(format!("out/stationary_N{n}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), n + 2);
    }
}

#[test]
fn simulate_writes_paths_and_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"model": {"N": 200, "s": 1, "u": 0.5, "nu0": 0.5}, "seed": 5,
                   "simulate": {"n_paths": 4, "t_end": 1, "grid_step": 0.5, "write_paths": true}}"#;
    let cfg = write_config(dir.path(), body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert!(
        moran(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(moran(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "2"
    ])
    .status
    .success());
    assert!(moran(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        c.to_str().unwrap(),
        "--seed",
        "6"
    ])
    .status
    .success());
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(
        read(&a, "ensemble_summary.json"),
        read(&b, "ensemble_summary.json")
    );
    assert_ne!(
        read(&a, "ensemble_summary.json"),
        read(&c, "ensemble_summary.json")
    );
    let paths = String::from_utf8(read(&a, "paths.csv")).unwrap();
    assert!(paths.starts_with("path_id,t,k\n0,0,20\n"));
    assert_eq!(paths.lines().count(), 1 + 4 * 3);
}

#[test]
fn clt_table_starts_with_rounding_offset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "clt",
        r#"{"model": {"N": 1000, "s": 1, "u": 0.5, "nu0": 0.5},
            "clt": {"z0": 0.1234, "times": [0, 1], "n_paths": 50}}"#,
    );
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/clt_report.json")).unwrap(),
    )
    .unwrap();
    let offset = report["result"]["initial_offset"].as_f64().unwrap();
    assert!((offset - 1000f64.sqrt() * (0.123 - 0.1234)).abs() < 1e-12);
    let row0 = &report["result"]["rows"][0];
    assert_eq!(row0["empirical_var"], 0.0);
    assert!((row0["empirical_mean"].as_f64().unwrap() - offset).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("out/clt_table.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,empirical_var,sigma2,ks_stat"));
}

#[test]
fn selfcheck_violation_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "selfcheck",
        r#"{"model": {"N": 500, "s": 1, "u": 0.5, "nu0": 0.5},
            "simulate": {"n_paths": 20, "deviation_threshold": 1e-6},
            "clt": {"n_paths": 20}}"#,
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lln_fraction_exceeding"));
    assert!(dir.path().join("out/selfcheck_report.json").exists());
}

#[test]
fn selfcheck_passes_without_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "selfcheck",
        r#"{"model": {"N": 500, "s": 2, "u": 0.3, "nu0": 0.4}, "selfcheck": {"monte_carlo": false}}"#,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
