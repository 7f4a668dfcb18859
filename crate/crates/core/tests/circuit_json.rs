use proptest::prelude::*;
use scramblenet_core::circuit::{build_brickwall, build_brickwall_haar, BrickWallCircuit};
use scramblenet_core::randmat::SeededRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn json_round_trip_is_bit_exact(seed in any::<u64>(), n in 2usize..6, depth in 0usize..6, haar in any::<bool>()) {
        let mut rng = SeededRng::new(seed);
        let c = if haar {
            build_brickwall_haar(n, depth, &mut rng).unwrap()
        } else {
            build_brickwall(n, depth, &mut rng).unwrap()
        };
        let back = BrickWallCircuit::from_json(&c.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &c);
        let (ub, uc) = (back.unitary(), c.unitary());
        prop_assert_eq!(ub.matrix(), uc.matrix());
    }
}

#[test]
fn document_is_versioned() {
    let c = build_brickwall(3, 2, &mut SeededRng::new(1)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
    assert_eq!(v["format"], "v1");
    assert_eq!(v["n_qubits"], 3);
}

#[test]
fn rejects_tampered_documents() {
    let c = build_brickwall(3, 2, &mut SeededRng::new(1)).unwrap();
    let text = c.to_json().unwrap();
    assert!(BrickWallCircuit::from_json(&text.replace("\"v1\"", "\"v0\"")).is_err());
    assert!(BrickWallCircuit::from_json("{").is_err());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["gates"][0]["qubits"] = serde_json::json!([0, 2]);
    assert!(BrickWallCircuit::from_json(&v.to_string()).is_err());
}
