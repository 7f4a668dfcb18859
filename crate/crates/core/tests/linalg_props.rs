use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use scramblenet_core::linalg::{herm_exp, kron, partial_trace, purity, reduced_density, DenseOperator};
use scramblenet_core::randmat::{gue_hermitian, haar_state, haar_unitary, SeededRng};

fn random_density(n: usize, rng: &mut SeededRng) -> DenseOperator {
    // mixture of two pure states
    let a = haar_state(1 << n, rng).unwrap().projector().unwrap();
    let b = haar_state(1 << n, rng).unwrap().projector().unwrap();
    &a.scaled(C64::from(0.3)) + &b.scaled(C64::from(0.7))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn herm_exp_is_unitary_and_additive(seed in any::<u64>(), n in 1usize..4, t1 in -7.0f64..7.0, t2 in -7.0f64..7.0) {
        let mut rng = SeededRng::new(seed);
        let v = gue_hermitian(1 << n, &mut rng, true).unwrap();
        let a = herm_exp(&v, t1).unwrap();
        let b = herm_exp(&v, t2).unwrap();
        prop_assert!(a.unitarity_error() < 1e-10);
        let ab = &a * &b;
        let sum = herm_exp(&v, t1 + t2).unwrap();
        prop_assert!(ab.max_abs_diff(&sum) < 1e-9);
        let inv = &a * &herm_exp(&v, -t1).unwrap();
        prop_assert!(inv.max_abs_diff(&DenseOperator::identity(n).unwrap()) < 1e-10);
    }

    #[test]
    fn partial_trace_composes(seed in any::<u64>(), mask in 1u32..15) {
        let n = 4;
        let mut rng = SeededRng::new(seed);
        let rho = random_density(n, &mut rng);
        let keep: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let first = partial_trace(&rho, n, &keep).unwrap();
        // tracing out one more qubit in two steps equals one step
        let inner: Vec<usize> = (1..keep.len()).collect();
        let outer: Vec<usize> = inner.iter().map(|&i| keep[i]).collect();
        if !outer.is_empty() {
            let two_step = partial_trace(&first, keep.len(), &inner).unwrap();
            let one_step = partial_trace(&rho, n, &outer).unwrap();
            prop_assert!(two_step.max_abs_diff(&one_step) < 1e-12);
        }
        prop_assert!((first.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(first.hermiticity_error() < 1e-12);
        let p = purity(&first);
        prop_assert!(p <= 1.0 + 1e-12 && p >= 1.0 / first.dim() as f64 - 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let a = random_density(1, &mut rng);
        let b = random_density(2, &mut rng);
        let ab = kron(&a, &b).unwrap();
        prop_assert!(partial_trace(&ab, 3, &[0]).unwrap().max_abs_diff(&a) < 1e-12);
        prop_assert!(partial_trace(&ab, 3, &[1, 2]).unwrap().max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn pure_state_marginals_share_spectrum(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let psi = haar_state(32, &mut rng).unwrap();
        let small = reduced_density(&psi, &[0, 3]).unwrap();
        let large = reduced_density(&psi, &[1, 2, 4]).unwrap();
        prop_assert!((purity(&small) - purity(&large)).abs() < 1e-12);
    }

    #[test]
    fn unitary_conjugation_keeps_trace(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let u = haar_unitary(8, &mut rng).unwrap();
        let rho = random_density(3, &mut rng);
        let out = &(&u * &rho) * &u.dagger();
        prop_assert!((out.trace() - rho.trace()).norm() < 1e-12);
        prop_assert!((purity(&out) - purity(&rho)).abs() < 1e-12);
    }
}

#[test]
fn kron_matches_explicit_entries() {
    let a = DenseOperator::new(DMatrix::from_fn(2, 2, |r, c| C64::new(r as f64 + 1.0, c as f64))).unwrap();
    let b = DenseOperator::new(DMatrix::from_fn(2, 2, |r, c| C64::new(0.0, (2 * r + c) as f64))).unwrap();
    let k = kron(&a, &b).unwrap();
    for r in 0..4 {
        for c in 0..4 {
            let expect = a[(r / 2, c / 2)] * b[(r % 2, c % 2)];
            assert_eq!(k[(r, c)], expect);
        }
    }
}
