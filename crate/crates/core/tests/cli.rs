use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aifdom"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_reports_the_set_point() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["simulate"], &config("fig3a_baseline_simulate.toml"), out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(&out.path().join("attractor.json"));
    assert_eq!(v["command"], "simulate");
    assert_eq!(v["result"]["attractor"]["kind"], "equilibrium");
    let eq: Vec<f64> = serde_json::from_value(v["result"]["attractor"]["equilibrium"].clone()).unwrap();
    for (a, b) in eq.iter().zip([2.0, 0.1, 2.0, 2.0]) {
        assert!((a - b).abs() < 1e-3);
    }
    let csv = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,xi_1,xi_2,xi_3,xi_4\n"));
}

#[test]
fn misspelled_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("fig3a_baseline_simulate.toml")).unwrap().replace("gamma", "gama");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let res = run(&["simulate"], &path, dir.path());
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("gama"));
}

#[test]
fn certify_without_region_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no_region.toml");
    fs::copy(config("fig3a_baseline_simulate.toml"), &path).unwrap();
    let res = run(&["certify"], &path, dir.path());
    assert_eq!(res.status.code(), Some(1));
    let err = json(&dir.path().join("error.json"));
    assert_eq!(err["result"]["kind"], "config");
}

#[test]
fn unknown_subcommand_exits_one() {
    let res = Command::new(env!("CARGO_BIN_EXE_aifdom")).arg("bogus").output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn nyquist_over_r0_has_no_encirclements() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["nyquist"], &config("fig3d_baseline_nyquist.toml"), out.path());
    assert!(res.status.success());
    let v = json(&out.path().join("nyquist.json"));
    assert_eq!(v["result"]["uniform_encirclements"], 0);
    assert_eq!(v["result"]["all_consistent"], true);
    let first = fs::read_to_string(out.path().join("nyquist_000.csv")).unwrap();
    assert!(first.starts_with("omega,re,im\n"));
}

#[test]
fn spectrum_over_r2_splits_evenly() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["spectrum"], &config("fig4e_high_sensing_spectrum.toml"), out.path());
    assert!(res.status.success());
    let v = json(&out.path().join("spectrum.json"));
    assert_eq!(v["result"]["uniform_split"], serde_json::json!([2, 2]));
}

#[test]
fn tabulated_baseline_verifies() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["verify"], &config("table1_baseline.toml"), out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(&out.path().join("verification.json"));
    assert_eq!(v["result"]["report"]["passed"], true);
}

#[test]
fn tampered_certificate_fails_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let mut cert: Value = serde_json::from_str(aif_dominance::dominance::table1::BASELINE).unwrap();
    cert["P"][1][1] = serde_json::json!(10.0);
    let path = dir.path().join("tampered.json");
    fs::write(&path, cert.to_string()).unwrap();
    let res = run(
        &["verify", "--certificate", path.to_str().unwrap()],
        &config("table1_baseline.toml"),
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(3));
    let v = json(&dir.path().join("verification.json"));
    let report = &v["result"]["report"];
    assert_eq!(report["passed"], false);
    assert!(report["worst"]["max_eigenvalue"].as_f64().unwrap() > 0.0 || !report["reasons"].as_array().unwrap().is_empty());
    assert!(dir.path().join("residuals.csv").exists());
}

#[test]
fn robust_certify_finds_two_dominance() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["robust-certify"], &config("fig6a_robust_high_sensing.toml"), out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(&out.path().join("certificate.json"));
    assert_eq!(v["p"], 2);
    assert_eq!(v["meta"]["robust"], true);
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let cfg = config("fig4b_high_sensing_region.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(&["certify", "--seed", "7"], &cfg, a.path()).status.success());
    assert!(run(&["certify", "--seed", "7"], &cfg, b.path()).status.success());
    let hash = aif_dominance::experiment::config_hash(&fs::read_to_string(&cfg).unwrap());
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let left = fs::read(a.path().join(&name)).unwrap();
        assert_eq!(left, fs::read(b.path().join(&name)).unwrap(), "{name:?} differs");
        if Path::new(&name).extension().is_some_and(|e| e == "json") {
            let v: Value = serde_json::from_slice(&left).unwrap();
            let stamp = if name == "certificate.json" { &v["meta"] } else { &v };
            assert_eq!(stamp["config_hash"], hash.as_str());
            assert_eq!(stamp["tool_version"], aif_dominance::experiment::TOOL_VERSION);
        }
    }
}

#[test]
fn format_flag_limits_outputs() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&["simulate", "--format", "json"], &config("fig3a_baseline_simulate.toml"), out.path());
    assert!(res.status.success());
    assert!(out.path().join("attractor.json").exists());
    assert!(!out.path().join("trajectory.csv").exists());
}
