use std::fs;

use scramblenet::run::run;
use scramblenet::{ExperimentConfig, ExperimentKind, HarnessError};
use scramblenet_core::circuit::InitMode;

fn small_depth_config(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::OtocDepth);
    cfg.n_qubits = 4;
    cfg.n_a = 1;
    cfg.n_d = 1;
    cfg.depths = (0..=30).collect();
    cfg.seeds = vec![3, 4, 5];
    cfg.init_mode = InitMode::HaarGate;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn runs_are_reproducible_and_stamped() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run(&small_depth_config(a.path())).unwrap();
    let sb = run(&small_depth_config(b.path())).unwrap();
    assert_eq!(sa.config_hash, sb.config_hash);
    assert!(sa.passed(), "{:?}", sa.checks);

    let svg = sa.files.iter().find(|p| p.extension().is_some_and(|e| e == "svg")).unwrap();
    assert!(fs::read_to_string(svg).unwrap().contains(&sa.config_hash));

    let csvs: Vec<_> = sa.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert!(!csvs.is_empty());
    for path in csvs {
        let name = path.file_name().unwrap();
        let bytes = fs::read(path).unwrap();
        assert_eq!(bytes, fs::read(b.path().join(name)).unwrap(), "{name:?}");
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# scramblenet "));
        assert!(header.contains(&format!("config_hash={}", sa.config_hash)));
        assert!(header.contains("seed=3"));
        assert_eq!(lines.next().unwrap(), "seed,n_qubits,n_a,n_d,depth,x,quantity,value,stderr");
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], sa.config_hash.as_str());
    assert_eq!(manifest["experiment"], "otoc-depth");
    assert_eq!(manifest["passed"], true);
    for f in manifest["files"].as_array().unwrap() {
        assert!(a.path().join(f["name"].as_str().unwrap()).exists());
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
    let saved = ExperimentConfig::load(&a.path().join("config.json")).unwrap();
    assert_eq!(saved.hash(), sa.config_hash);
}

#[test]
fn zero_tolerance_fails_the_floor_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_depth_config(dir.path());
    cfg.tolerances.insert("floor_rel".into(), 0.0);
    let summary = run(&cfg).unwrap();
    assert!(!summary.passed());
    let floor = summary.checks.iter().find(|c| !c.passed).unwrap();
    assert!(floor.name.contains("floor"), "{}", floor.name);
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let mut cfg = small_depth_config(&blocker.join("sub"));
    cfg.depths = vec![0, 1];
    assert!(matches!(run(&cfg), Err(HarnessError::Output { .. })));
}

#[test]
fn quick_twirl_and_gradient_runs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut twirl = ExperimentConfig::preset(ExperimentKind::TwirlOracle);
    twirl.samples = 2000;
    twirl.output_dir = dir.path().join("twirl");
    let s = run(&twirl).unwrap();
    assert!(s.passed(), "{:?}", s.checks);

    let mut audit = ExperimentConfig::preset(ExperimentKind::GradientAudit);
    audit.seeds = vec![0];
    audit.output_dir = dir.path().join("audit");
    let s = run(&audit).unwrap();
    assert!(s.passed(), "{:?}", s.checks);
}
