mod common;

use common::*;
use nalgebra::DMatrix;
use pbinfer::estimators::estimate_full;
use pbinfer::frame::{AnalysisFrame, OutcomeKind};
use pbinfer::mi::*;
use pbinfer::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn observed_multiset(frame: &AnalysisFrame) -> Vec<f64> {
    frame.y.iter().flatten().copied().collect()
}

fn assert_observed_untouched(frame: &AnalysisFrame, set: &ImputationSet) {
    for copy in &set.completed {
        for (i, y) in frame.y.iter().enumerate() {
            if let Some(v) = y {
                assert_eq!(copy[i].to_bits(), v.to_bits());
            }
        }
    }
}

#[test]
fn pmm_without_missingness_copies_y() {
    let (frame, truth) = toy_linear(30, 3, |_, _| false);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set = pmm_impute(&frame, 4, 5, &mut rng).unwrap();
    assert_eq!(set.k(), 4);
    for copy in &set.completed {
        assert_eq!(copy, &truth);
    }
}

#[test]
fn pmm_donors_come_from_observed_values() {
    for seed in 0..25 {
        let (frame, _) = toy_linear(10, seed, |i, _| i % 3 == 1);
        let pool = observed_multiset(&frame);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let set = pmm_impute(&frame, 3, 2, &mut rng).unwrap();
        assert_observed_untouched(&frame, &set);
        for copy in &set.completed {
            for i in frame.missing_indices() {
                assert!(
                    pool.iter().any(|v| v.to_bits() == copy[i].to_bits()),
                    "row {i} not a donor"
                );
            }
        }
    }
}

#[test]
fn pmm_single_donor_on_noiseless_line_picks_nearest_outcome() {
    let n = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() * 10.0);
    let z = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
    let truth: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * x[(i, 0)] - z[(i, 0)]).collect();
    let y = (0..n).map(|i| if i % 4 == 0 { None } else { Some(truth[i]) }).collect();
    let frame = AnalysisFrame::new(OutcomeKind::Continuous, x, z, y).unwrap();
    let set = pmm_impute(&frame, 2, 1, &mut rng).unwrap();
    let pool = observed_multiset(&frame);
    for copy in &set.completed {
        for i in frame.missing_indices() {
            let nearest = pool
                .iter()
                .copied()
                .min_by(|a, b| (a - truth[i]).abs().total_cmp(&(b - truth[i]).abs()))
                .unwrap();
            assert_eq!(copy[i], nearest);
        }
    }
}

#[test]
fn pmm_needs_enough_donors() {
    let (frame, _) = toy_linear(10, 1, |i, _| i >= 6);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let err = pmm_impute(&frame, 3, 5, &mut rng).unwrap_err();
    assert!(matches!(
        err,
        Error::TooFewDonors {
            available: 6,
            required: 9
        }
    ));
}

#[test]
fn rf_constant_outcome_imputes_constant() {
    let (mut frame, _) = toy_linear(50, 4, |i, _| i % 2 == 0);
    for v in frame.y.iter_mut().flatten() {
        *v = 2.5;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let set = rf_impute(&frame, 3, &ForestParams::default(), &mut rng).unwrap();
    for copy in &set.completed {
        assert!(copy.iter().all(|v| *v == 2.5));
    }
}

#[test]
fn rf_without_missingness_copies_y() {
    let (frame, truth) = toy_linear(30, 8, |_, _| false);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set = rf_impute(&frame, 2, &ForestParams::default(), &mut rng).unwrap();
    assert!(set.completed.iter().all(|c| c == &truth));
}

#[test]
fn rf_stump_draws_from_the_right_cluster() {
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = DMatrix::from_fn(n, 1, |i, _| if i % 2 == 0 { -5.0 } else { 5.0 } + rng.random::<f64>());
    let z = DMatrix::zeros(n, 0);
    let y: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let base = if i % 2 == 0 { 0.0 } else { 10.0 };
            if i % 3 == 0 {
                None
            } else {
                Some(base + rng.random::<f64>())
            }
        })
        .collect();
    let frame = AnalysisFrame::new(OutcomeKind::Continuous, x.clone(), z, y).unwrap();
    let params = ForestParams {
        trees: 1,
        max_depth: 1,
        min_leaf: 2,
        mtry: None,
    };
    let obs = frame.observed_indices();
    let left: Vec<f64> = obs
        .iter()
        .filter(|&&i| x[(i, 0)] < 0.0)
        .map(|&i| frame.y[i].unwrap())
        .collect();
    let right: Vec<f64> = obs
        .iter()
        .filter(|&&i| x[(i, 0)] > 0.0)
        .map(|&i| frame.y[i].unwrap())
        .collect();
    let set = rf_impute(&frame, 3, &params, &mut rng).unwrap();
    assert_observed_untouched(&frame, &set);
    for copy in &set.completed {
        for i in frame.missing_indices() {
            let leaf = if x[(i, 0)] < 0.0 { &left } else { &right };
            assert!(leaf.contains(&copy[i]), "row {i} drew {} from the wrong leaf", copy[i]);
        }
    }
}

#[test]
fn rf_needs_two_leaves_of_rows() {
    let (frame, _) = toy_linear(20, 2, |i, _| i >= 9);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let err = rf_impute(&frame, 2, &ForestParams::default(), &mut rng).unwrap_err();
    assert!(matches!(
        err,
        Error::TooFewDonors {
            available: 9,
            required: 10
        }
    ));
}

#[test]
fn pooled_fit_without_missingness_is_the_full_fit() {
    let (frame, _) = toy_linear(40, 6, |_, _| false);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fit = estimate_mi(&frame, Imputer::Pmm, &MiParams::default(), &mut rng).unwrap();
    let full = estimate_full(&frame).unwrap();
    assert!((&fit.beta - &full.beta).amax() < 1e-12);
    assert!((&fit.cov - &full.cov).amax() < 1e-12);
    assert!(fit.df.as_ref().unwrap().iter().all(|v| v.is_infinite()));
    assert_eq!(fit.method_tag, "mi_pmm");
}

#[test]
fn pooled_fit_recovers_coefficients_under_mcar() {
    let (frame, _) = toy_linear(2000, 12, |i, _| i % 2 == 1);
    for imputer in [Imputer::Pmm, Imputer::Rf] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fit = estimate_mi(&frame, imputer, &MiParams::default(), &mut rng).unwrap();
        let df = fit.df.as_ref().unwrap();
        assert!(df.iter().all(|v| *v > 0.0));
        // PMM is roughly unbiased; the forest's donor draw attenuates slopes,
        // so only the sign of the main effect is checked for it.
        match imputer {
            Imputer::Pmm => assert!((fit.beta[1] - 0.8).abs() < 4.0 * fit.se[1], "{}", fit.beta[1]),
            Imputer::Rf => assert!(fit.beta[1] > 0.3),
        }
    }
}

proptest! {
    #[test]
    fn rubin_pool_invariants(
        est in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..7),
        var_scale in 0.01f64..2.0,
        c in -3.0f64..3.0,
        shift in 0usize..7,
    ) {
        let k = est.len();
        let var: Vec<Vec<f64>> = (0..k).map(|i| vec![var_scale * (1.0 + i as f64); 3]).collect();
        let p = rubin_pool(&est, &var).unwrap();
        for j in 0..3 {
            prop_assert!(p.b[j] >= 0.0);
            prop_assert!(p.df[j] > 0.0);
            prop_assert!(p.total[j] >= p.ubar[j]);
            let expect = p.ubar[j] + (1.0 + 1.0 / k as f64) * p.b[j];
            prop_assert!((p.total[j] - expect).abs() <= 1e-12 * expect.max(1.0));
        }

        let mut rot_e = est.clone();
        let mut rot_v = var.clone();
        rot_e.rotate_left(shift % k);
        rot_v.rotate_left(shift % k);
        let q = rubin_pool(&rot_e, &rot_v).unwrap();
        for j in 0..3 {
            prop_assert!((p.beta[j] - q.beta[j]).abs() < 1e-12);
            prop_assert!((p.b[j] - q.b[j]).abs() < 1e-10);
        }

        let scaled: Vec<Vec<f64>> = est.iter().map(|e| e.iter().map(|v| c * v).collect()).collect();
        let s = rubin_pool(&scaled, &var).unwrap();
        for j in 0..3 {
            prop_assert!((s.beta[j] - c * p.beta[j]).abs() < 1e-10);
            prop_assert!((s.b[j] - c * c * p.b[j]).abs() < 1e-9 * (1.0 + p.b[j]));
        }
    }
}
