use std::process::Command;

use scramblenet_core::circuit::build_brickwall;
use scramblenet_core::randmat::SeededRng;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scramblenet"))
}

#[test]
fn preset_prints_loadable_json() {
    let out = cli().args(["preset", "levy"]).output().unwrap();
    assert!(out.status.success());
    let cfg = scramblenet::ExperimentConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.n_qubits, 6);
}

#[test]
fn run_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "--experiment", "otoc-depth", "--n-qubits", "4", "--na", "1", "--nd", "1"])
        .args(["--depths", "0,1,2,3", "--seeds", "0,1", "--seed", "9", "--tol", "floor_min_depth=99"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = scramblenet::ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(cfg.seeds, vec![9, 10]);
    assert_eq!(cfg.depths, vec![0, 1, 2, 3]);
    assert_eq!(cfg.tolerance("floor_min_depth"), 99.0);
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "--experiment", "otoc-depth", "--na", "8", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cli().args(["run", "--experiment", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn otoc_of_saved_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let c = build_brickwall(4, 0, &mut SeededRng::new(1)).unwrap();
    std::fs::write(&path, c.to_json().unwrap()).unwrap();
    let out = cli().arg("otoc").arg("--circuit").arg(&path).args(["--na", "1", "--nd", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-12, "{text}");
}

#[test]
fn verify_exit_codes_follow_tolerance_scale() {
    let dir = tempfile::tempdir().unwrap();
    let junit = dir.path().join("j.xml");
    let ok = cli().args(["verify", "--only", "3", "--junit"]).arg(&junit).output().unwrap();
    assert!(ok.status.success());
    assert!(std::fs::read_to_string(&junit).unwrap().contains("<testsuite"));
    let strict = cli().args(["verify", "--only", "3", "--tol-scale", "0"]).output().unwrap();
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8(strict.stdout).unwrap().contains("[FAIL] criterion  3"));
}
