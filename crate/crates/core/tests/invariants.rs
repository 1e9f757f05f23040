use collapse_core::collapse::{decompose, derive_measurement_operators, CandidateBasis};
use collapse_core::energy::{energy_after_ensemble, energy_before, energy_delta};
use collapse_core::entanglement::{EntanglementProbe, SpeedMethod};
use collapse_core::quantum::{build_hamiltonian, evolve, ModelSpec, PauliTermSum, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_hamiltonian(num_sites: usize, rng: &mut ChaCha20Rng) -> PauliTermSum {
    let letters = ['I', 'X', 'Y', 'Z'];
    let terms = (0..2 * num_sites)
        .map(|_| {
            let label: String = (0..num_sites).map(|_| letters[rng.random_range(0..4)]).collect();
            (C64::new(rng.random_range(-1.0..1.0), 0.0), label)
        })
        .collect();
    build_hamiltonian(&ModelSpec::Custom { num_sites, terms }).unwrap()
}

fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    m.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_reconstructs_the_state(seed in any::<u64>(), n in 1usize..6, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let psi = StateVector::random(n + 1, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let d = decompose(&psi, &CandidateBasis::new(theta, phi).unwrap()).unwrap();
        let w = d.born_weights();
        prop_assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
        for (a, b) in d.reconstruct().iter().zip(psi.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn branches_are_product_states(seed in any::<u64>(), n in 1usize..6, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let psi = StateVector::random(n + 1, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n }).unwrap();
        let probe = EntanglementProbe::new(&h);
        let d = decompose(&psi, &CandidateBasis::new(theta, phi).unwrap()).unwrap();
        for i in 0..2 {
            prop_assert!(probe.entropy(&d.branch_state(i)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn observables_ignore_global_phase(seed in any::<u64>(), n in 1usize..5, alpha in -10.0..10.0f64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let psi = StateVector::random(n + 1, &mut rng).unwrap();
        let h = random_hamiltonian(n + 1, &mut rng);
        let probe = EntanglementProbe::new(&h);
        let rotated = psi.with_global_phase(alpha);
        prop_assert!((probe.entropy(&psi).unwrap() - probe.entropy(&rotated).unwrap()).abs() < 1e-12);
        let (a, b) = (probe.speed(&psi, SpeedMethod::Analytic).unwrap().value, probe.speed(&rotated, SpeedMethod::Analytic).unwrap().value);
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        prop_assert!((energy_before(&psi, &h).unwrap() - energy_before(&rotated, &h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cross_terms_account_for_the_energy_change(seed in any::<u64>(), n in 1usize..6, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let psi = StateVector::random(n + 1, &mut rng).unwrap();
        let h = random_hamiltonian(n + 1, &mut rng);
        let d = decompose(&psi, &CandidateBasis::new(theta, phi).unwrap()).unwrap();
        let direct = energy_before(&psi, &h).unwrap() - energy_after_ensemble(&d, &h).unwrap();
        prop_assert!((energy_delta(&d, &h).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn entropy_is_bounded(seed in any::<u64>(), n in 1usize..7) {
        let psi = StateVector::random(n + 1, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let h = build_hamiltonian(&ModelSpec::DegenerateIsing { n, g: 1.0 }).unwrap();
        let e = EntanglementProbe::new(&h).entropy(&psi).unwrap();
        prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&e));
    }

    #[test]
    fn evolution_is_unitary(seed in any::<u64>(), n in 1usize..6, t in 0.0..3.0f64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let psi = StateVector::random(n + 1, &mut rng).unwrap();
        let h = random_hamiltonian(n + 1, &mut rng);
        let out = evolve(&psi, &h, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        // energy is conserved
        prop_assert!((energy_before(&out, &h).unwrap() - energy_before(&psi, &h).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn measurement_operators_are_complete(seed in any::<u64>(), d_s in 2usize..4, d_a in 2usize..4) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let u = random_unitary(d_s * d_a, &mut rng);
        let mut ready = vec![C64::new(0.0, 0.0); d_a];
        ready[0] = C64::new(1.0, 0.0);
        let basis: Vec<Vec<C64>> = (0..d_a)
            .map(|k| (0..d_a).map(|j| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let ops = derive_measurement_operators(&u, &ready, &basis).unwrap();
        prop_assert!(ops.completeness_residual() < 1e-9);
    }
}
