//! τ-vector codec and baseline estimator on sampled states.

use qbayes_core::ensembles::{sample_bures, sample_ma};
use qbayes_core::estimators::{baseline_estimate, rho_to_tau, tau_to_rho, TauVector};
use qbayes_core::linalg::{fidelity, StateVector, C64, PHYSICAL_TOL};
use qbayes_core::measurement::{simulate_counts_36, simulate_shots};
use qbayes_core::rng::{RngSeed, RngStream};
use qbayes_core::stats::mean;

#[test]
fn roundtrip_through_tau_for_one_to_four_qubits() {
    let mut r = RngStream::new(RngSeed::new(1, 0));
    for d in [2, 4, 8, 16] {
        for _ in 0..20 {
            let rho = sample_bures(d, &mut r);
            let back = tau_to_rho(&rho_to_tau(&rho)).unwrap();
            assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-8, "D = {d}");
        }
    }
}

#[test]
fn roundtrip_holds_for_rank_deficient_states() {
    let mut r = RngStream::new(RngSeed::new(2, 0));
    for d in [2, 4, 8] {
        // rank 2 mixtures and pure states
        for k in [1, 2] {
            let rho = sample_ma(d, k, 1.0, &mut r).unwrap();
            let back = tau_to_rho(&rho_to_tau(&rho)).unwrap();
            assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-5, "D = {d}, rank {k}");
        }
    }
}

#[test]
fn every_finite_tau_decodes_to_a_physical_state() {
    let mut r = RngStream::new(RngSeed::new(3, 0));
    use rand::Rng;
    for d in [2, 4, 8, 16] {
        for _ in 0..50 {
            let tau = TauVector::new((0..d * d).map(|_| r.random_range(-5.0..5.0)).collect()).unwrap();
            let rho = tau_to_rho(&tau).unwrap();
            let m = rho.matrix();
            assert!((m.trace() - C64::new(1.0, 0.0)).norm() < PHYSICAL_TOL);
            assert!(m.hermitian_deviation() < PHYSICAL_TOL);
            assert!(qbayes_core::linalg::eigh(m).values[0] > -PHYSICAL_TOL);
        }
    }
}

#[test]
fn baseline_estimate_concentrates_on_single_qubit_truths() {
    let mut r = RngStream::new(RngSeed::new(4, 0));
    let f: Vec<f64> = (0..20)
        .map(|_| {
            let truth = sample_bures(2, &mut r);
            let data = simulate_shots(&truth, 16_000, &mut r).unwrap();
            fidelity(&baseline_estimate(&data).unwrap(), &truth).unwrap()
        })
        .collect();
    assert!(mean(&f) > 0.99, "mean fidelity {}", mean(&f));
}

#[test]
fn baseline_estimate_recovers_a_bell_state_from_counts() {
    let mut r = RngStream::new(RngSeed::new(5, 0));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let phi = StateVector::new(vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap().projector();
    let data = simulate_counts_36(&phi, 10_000, &mut r).unwrap();
    let est = baseline_estimate(&data).unwrap();
    assert!(fidelity(&est, &phi).unwrap() > 0.98);
}

#[test]
fn baseline_estimate_handles_three_qubits() {
    let mut r = RngStream::new(RngSeed::new(6, 0));
    let truth = sample_bures(8, &mut r);
    let data = simulate_shots(&truth, 200_000, &mut r).unwrap();
    let est = baseline_estimate(&data).unwrap();
    assert!(fidelity(&est, &truth).unwrap() > 0.9);
}
