use std::path::PathBuf;

use proptest::prelude::*;
use scramblenet::{ExperimentConfig, ExperimentKind, HarnessError};

#[test]
fn presets_validate_and_round_trip() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::preset(kind);
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg, "{kind}");
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(kind.as_str().parse::<ExperimentKind>().unwrap(), kind);
    }
}

#[test]
fn json_uses_spec_field_names() {
    let v: serde_json::Value = serde_json::from_str(&ExperimentConfig::preset(ExperimentKind::Landscape).to_json().unwrap()).unwrap();
    assert_eq!(v["experiment"], "landscape");
    assert_eq!(v["n_A"], 1);
    assert_eq!(v["n_D"], 1);
    assert_eq!(v["epsilon_grid"].as_array().unwrap().len(), 65);
}

#[test]
fn rejects_bad_configs() {
    let text = ExperimentConfig::preset(ExperimentKind::OtocDepth).to_json().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["surprise"] = serde_json::json!(1);
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());

    let mut cfg = ExperimentConfig::preset(ExperimentKind::OtocDepth);
    cfg.n_a = 8;
    assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    let mut cfg = ExperimentConfig::preset(ExperimentKind::OtocDepth);
    cfg.seeds.clear();
    assert!(cfg.validate().is_err());
    let mut cfg = ExperimentConfig::preset(ExperimentKind::OtocDepth);
    cfg.n_qubits = 13;
    assert!(cfg.validate().is_err());
    assert!("bogus".parse::<ExperimentKind>().is_err());
}

#[test]
fn hash_tracks_content_not_location() {
    let a = ExperimentConfig::preset(ExperimentKind::LscramSweep);
    let mut b = a.clone();
    b.output_dir = PathBuf::from("/somewhere/else");
    assert_eq!(a.hash(), b.hash());
    b.reseed(7);
    assert_ne!(a.hash(), b.hash());
    assert_eq!(b.seeds, (7..17).collect::<Vec<u64>>());
    assert_eq!(b.first_seed(), 7);
}

#[test]
fn tolerance_falls_back_to_defaults() {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::OtocDepth);
    cfg.tolerances.clear();
    assert_eq!(cfg.tolerance("floor_rel"), 0.05);
    cfg.tolerances.insert("floor_rel".into(), 0.5);
    assert_eq!(cfg.tolerance("floor_rel"), 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_floats_survive_json(
        grid in proptest::collection::vec(-1e6f64..1e6, 1..20),
        tol in proptest::num::f64::POSITIVE | proptest::num::f64::ZERO,
        seeds in proptest::collection::vec(any::<u64>(), 1..5),
    ) {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::Landscape);
        cfg.epsilon_grid = grid;
        cfg.seeds = seeds;
        cfg.tolerances.insert("flat_fraction".into(), tol);
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
