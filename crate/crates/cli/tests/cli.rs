use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONSTANT_B: &str = r#"{"dim": 2, "magnetic": [{"type": "constant", "b12": 0.1}], "grids": {"boundary": 10}}"#;

const BUMP: &str = r#"{"dim": 2,
  "potential": [{"center": [0.1, -0.1], "profile": {"type": "bump", "amplitude": 0.01, "radius": 0.6}}],
  "magnetic": [{"type": "planar", "center": [-0.1, 0.1], "profile": {"type": "bump", "amplitude": 0.05, "radius": 0.5}}],
  "grids": {"boundary": 10}, "scattering_samples": 30, "input": "INPUT"}"#;

fn fixen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fixen")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn thresholds_zero_field_unit_disk() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.json", r#"{"dim": 2}"#);
    let out = fixen(dir.path(), &["thresholds", "--config", "zero.json", "--out", "o", "--energy", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/thresholds.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["c1"], 2.0);
    assert_eq!(v["report"]["c2"], 1.0);
    assert_eq!(v["report"]["c9"], 2.0);
    assert_eq!(v["report"]["c10"], 2.0);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_reciprocity_constant_b_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cb.json", CONSTANT_B);
    let out = fixen(dir.path(), &["verify", "--suite", "reciprocity", "--config", "cb.json", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/verify.json")).unwrap()).unwrap();
    assert_eq!(v["checks"]["reciprocity"]["passed"], true);
    assert_eq!(v["checks"]["reciprocity"]["sample_count"], 200);
}

#[test]
fn convert_roundtrip_reproduces_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "sweep.json", &BUMP.replace("INPUT", "none"));
    write(p, "b2s.json", &BUMP.replace("INPUT", "b/boundary.csv"));
    write(p, "s2b.json", &BUMP.replace("INPUT", "s/scattering.csv"));
    assert!(fixen(p, &["boundary-sweep", "--config", "sweep.json", "--out", "b"]).status.success());
    assert!(fixen(p, &["convert", "--direction", "b2s", "--config", "b2s.json", "--out", "s"]).status.success());
    assert!(fixen(p, &["convert", "--direction", "s2b", "--config", "s2b.json", "--out", "r"]).status.success());
    let a = rows(&p.join("b/boundary.csv"));
    let b = rows(&p.join("r/boundary.csv"));
    assert_eq!(a.len(), 90);
    assert_eq!(a.len(), b.len());
    // every column except the action and the shooting residual
    for (x, y) in a.iter().zip(&b) {
        for i in 0..10 {
            assert!((x[i] - y[i]).abs() <= 1e-8, "column {i}: {} vs {}", x[i], y[i]);
        }
    }
}

#[test]
fn outputs_are_deterministic_and_carry_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "bump.json", &BUMP.replace("INPUT", "none"));
    for (out, jobs) in [("a", "1"), ("b", "3")] {
        assert!(fixen(p, &["boundary-sweep", "--config", "bump.json", "--out", out, "--jobs", jobs]).status.success());
        assert!(fixen(p, &["scattering-sweep", "--config", "bump.json", "--out", out, "--jobs", jobs, "--seed", "7"]).status.success());
        assert!(fixen(p, &["simulate", "--config", "bump.json", "--out", out, "--jobs", jobs]).status.success());
    }
    for f in ["boundary.csv", "boundary.json", "scattering.csv", "trajectory_000.csv", "simulate.json"] {
        let a = fs::read(p.join("a").join(f)).unwrap();
        let b = fs::read(p.join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    let sweep_hash = String::from_utf8(fs::read(p.join("a/boundary.csv")).unwrap()).unwrap().lines().next().unwrap().to_string();
    let scatter_hash = String::from_utf8(fs::read(p.join("a/scattering.csv")).unwrap()).unwrap().lines().next().unwrap().to_string();
    assert!(sweep_hash.starts_with("# config_hash="));
    // the seed is part of the configuration
    assert_ne!(sweep_hash, scatter_hash);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "bad.json", r#"{"dim": 5}"#);
    write(p, "typo.json", r#"{"dim": 2, "enrgy": 3}"#);
    write(p, "cb.json", CONSTANT_B);
    for args in [
        vec!["thresholds", "--config", "bad.json"],
        vec!["thresholds", "--config", "typo.json"],
        vec!["thresholds", "--config", "missing.json"],
        vec!["boundary-sweep", "--config", "cb.json", "--energy", "5", "--out", "o"],
        vec!["verify", "--suite", "nonsense", "--config", "cb.json", "--out", "o"],
        vec!["reconstruct", "--config", "cb.json", "--out", "o"],
        vec!["no-such-command"],
    ] {
        assert_eq!(fixen(p, &args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // the boundary lies outside the energy shell, so no pair can be shot
    write(p, "strong.json", r#"{"dim": 2, "potential": [{"center": [0, 0], "profile": {"type": "harmonic", "strength": 10}}],
                               "grids": {"boundary": 6}, "energy": 3, "allow_below_threshold": true}"#);
    let out = fixen(p, &["boundary-sweep", "--config", "strong.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(p.join("o/boundary.json").exists());
}

#[test]
fn verification_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "loose.json", r#"{"dim": 2, "magnetic": [{"type": "constant", "b12": 0.1}],
                              "tolerances": {"rtol": 1e-5, "atol": 1e-7, "shoot": 1e-4}}"#);
    let out = fixen(p, &["verify", "action-gradients", "--config", "loose.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("o/verify.json")).unwrap()).unwrap();
    assert_eq!(v["checks"]["action-gradients[analytic]"]["passed"], false);
}

#[test]
fn reconstruct_recovers_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "truth.json", r#"{"dim": 2, "potential": [{"center": [0.1, -0.1], "profile": {"type": "bump", "amplitude": 0.01, "radius": 0.6}}],
                              "grids": {"boundary": 10}, "energy": 300}"#);
    assert!(fixen(p, &["boundary-sweep", "--config", "truth.json", "--out", "d"]).status.success());
    write(
        p,
        "fit.json",
        r#"{"dim": 2, "energy": 300, "grids": {"interior": 8},
            "reconstruct": {"data": "d/boundary.csv", "potential": [{"center": [0.1, -0.1], "radius": 0.6}],
                            "free_centers": false, "initial": [0.02], "truth": [0.01], "optimizer": "levenberg-marquardt"}}"#,
    );
    let out = fixen(p, &["reconstruct", "--config", "fit.json", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("o/reconstruction.json")).unwrap()).unwrap();
    let err = v["result"]["relative_errors"][0].as_f64().unwrap();
    assert!(err < 1e-6, "{err}");
    let grid = fs::read_to_string(p.join("o/field_grid.csv")).unwrap();
    assert_eq!(grid.lines().nth(1).unwrap(), "x1,x2,V,B12");
}
