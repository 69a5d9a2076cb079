//! Property-based invariants.

use proptest::prelude::*;
use qbayes_core::ensembles::{sample_bures, sample_ma};
use qbayes_core::estimators::{tau_to_rho, TauVector};
use qbayes_core::linalg::{eigh, fidelity, psd_project, purity, C64, PHYSICAL_TOL};
use qbayes_core::measurement::{log_likelihood, simulate_shots, CompiledLikelihood, MeasurementDataset};
use qbayes_core::priors::{ParamVector, PriorModel};
use qbayes_core::rng::{RngSeed, RngStream};

fn assert_physical(m: &qbayes_core::linalg::CMatrix) {
    assert!((m.trace() - C64::new(1.0, 0.0)).norm() < PHYSICAL_TOL);
    assert!(m.hermitian_deviation() < PHYSICAL_TOL);
    assert!(eigh(m).values[0] > -PHYSICAL_TOL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_decodes_to_physical_states(vals in prop::collection::vec(-10.0f64..10.0, 16)) {
        prop_assume!(vals[..4].iter().any(|v| v.abs() > 1e-6));
        let rho = tau_to_rho(&TauVector::new(vals).unwrap()).unwrap();
        assert_physical(rho.matrix());
    }

    #[test]
    fn bures_map_is_physical_for_any_input(vals in prop::collection::vec(-8.0f64..8.0, 64)) {
        if let Ok(rho) = PriorModel::bures(4).unwrap().map(&ParamVector::new(vals).unwrap()) {
            assert_physical(rho.matrix());
        }
    }

    #[test]
    fn ml_biased_map_is_physical_for_any_input(vals in prop::collection::vec(-40.0f64..40.0, 21)) {
        let est = qbayes_core::linalg::CMatrix::from_diag(&[0.9, 0.1]);
        let model = PriorModel::ml_biased(&est, 25.0, 11.6, Some(5)).unwrap();
        let rho = model.map(&ParamVector::new(vals).unwrap()).unwrap();
        assert_physical(rho.matrix());
    }

    #[test]
    fn likelihood_is_permutation_invariant_and_additive(seed in any::<u64>(), split in 0usize..200) {
        let mut r = RngStream::new(RngSeed::new(seed, 0));
        let rho = sample_bures(4, &mut r);
        let truth = sample_ma(4, 2, 1.0, &mut r).unwrap();
        let data = simulate_shots(&truth, 200, &mut r).unwrap();
        let total = log_likelihood(&rho, &data).unwrap();

        let mut recs = data.records().to_vec();
        recs.reverse();
        let len = recs.len();
        recs.rotate_left(split % len);
        let shuffled = MeasurementDataset::from_records(2, data.mode(), recs.clone()).unwrap();
        let permuted = log_likelihood(&rho, &shuffled).unwrap();
        prop_assert!((total - permuted).abs() <= 1e-9 * total.abs().max(1.0));

        let a = MeasurementDataset::from_records(2, data.mode(), recs[..split].to_vec()).unwrap();
        let b = MeasurementDataset::from_records(2, data.mode(), recs[split..].to_vec()).unwrap();
        let parts = log_likelihood(&rho, &a).unwrap() + log_likelihood(&rho, &b).unwrap();
        prop_assert!((total - parts).abs() <= 1e-9 * total.abs().max(1.0));

        let compiled = CompiledLikelihood::new(&data).eval(rho.matrix());
        prop_assert!((total - compiled).abs() <= 1e-9 * total.abs().max(1.0));
        prop_assert!(total <= 0.0);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut r = RngStream::new(RngSeed::new(seed, 0));
        let a = sample_bures(4, &mut r);
        let b = sample_ma(4, 2, 0.5, &mut r).unwrap();
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&ab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn projection_leaves_physical_states_unchanged(seed in any::<u64>()) {
        let mut r = RngStream::new(RngSeed::new(seed, 0));
        let rho = sample_bures(4, &mut r);
        let p = psd_project(rho.matrix()).unwrap();
        prop_assert!(p.matrix().max_abs_diff(rho.matrix()) < 1e-10);
        let q = purity(&rho);
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&q));
    }
}
