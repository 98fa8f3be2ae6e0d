use std::sync::Arc;

use proptest::prelude::*;
use revdiff_core::bounds::{
    chi2_quadrature, chi2_spherical, chi2_spherical_printed, cor2_bound, lambda_p,
    lsi_compact_support, lsi_mixture, lsi_two_component, thm2_bound, thm4_bound_delta,
    thm4_bound_delta_best, thm4_bound_general, LsiProfile,
};
use revdiff_core::{Component, ForwardProcess, GammaSchedule, GaussianMixture, TimeGrid};

fn mixture_profile() -> LsiProfile {
    LsiProfile::Mixture {
        data: GaussianMixture::default_dataset(),
        sde: Arc::new(ForwardProcess::edm()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn chi2_closed_form_matches_quadrature(
        m0 in prop::collection::vec(-2.0f64..2.0, 1..4),
        shift in prop::collection::vec(-1.5f64..1.5, 4),
        v0 in 0.1f64..2.0,
        r in 0.55f64..3.0,
    ) {
        let m1: Vec<f64> = m0.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let v1 = r * v0;
        let c = chi2_spherical(&m0, v0, &m1, v1).unwrap();
        let q = chi2_quadrature(&m0, v0, &m1, v1, 1e-13).unwrap();
        prop_assert!((c - q).abs() <= 1e-6 * q.abs().max(1e-12), "{} vs {}", c, q);
    }

    #[test]
    fn lsi_bound_dominates_variance(
        p in 0.05f64..0.95, a in -2.0f64..2.0, b in -2.0f64..2.0,
        s0 in 0.1f64..1.0, s1 in 0.1f64..1.0,
    ) {
        let m = GaussianMixture::new(vec![
            Component { weight: p, mean: vec![a], std: s0 },
            Component { weight: 1.0 - p, mean: vec![b], std: s1 },
        ]).unwrap();
        if let Ok(c) = lsi_mixture(&m) {
            prop_assert!(c >= m.variance()[0] * (1.0 - 1e-12), "C = {} < var = {}", c, m.variance()[0]);
        }
    }

    #[test]
    fn cor2_is_non_decreasing(eps in prop::collection::vec(0.0f64..5.0, 41), gamma in 0.1f64..10.0) {
        let grid = TimeGrid::karras(0.75, 40, 0.002, 7.0).unwrap();
        let sched = GammaSchedule::constant(gamma).unwrap();
        let tr = cor2_bound(0.01, &sched, &ForwardProcess::edm(), &grid, &eps).unwrap();
        prop_assert!(tr.values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(tr.values[0], 0.01);
    }
}

#[test]
fn printed_chi2_is_not_a_divergence() {
    let m = [0.3];
    assert_eq!(chi2_spherical(&m, 0.5, &m, 0.5).unwrap(), 0.0);
    assert!(chi2_spherical_printed(&m, 0.5, &m, 0.5).unwrap().abs() > 0.1);
    assert!(chi2_spherical(&m, 1.0, &m, 0.4).is_err());
}

#[test]
fn lambda_branches_meet() {
    for u in [1e-4f64 * (1.0 - 1e-9), 1e-4 * (1.0 + 1e-9)] {
        let p = 0.5 * (1.0 + u);
        let exact = 2.0 * u.atanh() / u;
        assert!((lambda_p(p) - exact).abs() < 1e-13, "{u}");
    }
    assert_eq!(lambda_p(0.5), 2.0);
    for p in [0.01, 0.2, 0.37] {
        assert!((lambda_p(p) - lambda_p(1.0 - p)).abs() < 1e-12);
    }
}

#[test]
fn lsi_reference_values() {
    let m = [0.0];
    // equal weights, identical components: λ = 2, χ² = 0, so C = σ² (1 + ½·2) = 2σ²
    assert!((lsi_two_component(0.5, (&m, 0.3), (&m, 0.3)).unwrap() - 0.18).abs() < 1e-15);
    let c = lsi_compact_support(1.0, &ForwardProcess::edm(), 1.0).unwrap();
    assert_eq!(c, 30.0 * 4f64.exp());
}

#[test]
fn zero_score_error_reduces_to_thm2() {
    let edm = ForwardProcess::edm();
    let grid = TimeGrid::karras(0.75, 200, 0.002, 7.0).unwrap();
    let lsi = mixture_profile();
    let zeros = vec![0.0; grid.nodes().len()];
    for gamma in [0.5, 1.0, 4.0] {
        let sched = GammaSchedule::constant(gamma).unwrap();
        let t2 = thm2_bound(0.01, &lsi, &sched, &edm, &grid);
        let g = thm4_bound_general(0.01, &lsi, &sched, &edm, &grid, &zeros).unwrap();
        let d = thm4_bound_delta(0.01, &lsi, &sched, &edm, &grid, &zeros, 1e-14).unwrap();
        for k in 0..t2.values.len() {
            assert!((g.values[k] - t2.values[k]).abs() <= 1e-12);
            assert!((d.values[k] - t2.values[k]).abs() <= 1e-12);
        }
        assert!(t2.values.windows(2).all(|w| w[1] <= w[0]));
        // a finite ratio only loses contraction
        let best = thm4_bound_delta_best(0.01, &lsi, &sched, &edm, &grid, &zeros, 10).unwrap();
        assert_eq!(best.delta_ratio, Some(0.1));
        assert!(best.last() >= t2.last());
    }
}

#[test]
fn ode_schedule_keeps_thm2_constant() {
    let grid = TimeGrid::karras(0.75, 50, 0.002, 7.0).unwrap();
    let t2 = thm2_bound(0.02, &mixture_profile(), &GammaSchedule::ode(), &ForwardProcess::edm(), &grid);
    assert!(t2.values.iter().all(|&v| v == 0.02));
}

#[test]
fn delta_form_rejects_bad_ratios() {
    let grid = TimeGrid::karras(0.75, 10, 0.002, 7.0).unwrap();
    let sched = GammaSchedule::constant(1.0).unwrap();
    let e = vec![0.1; 11];
    for r in [0.0, -0.5, 1.5] {
        assert!(thm4_bound_delta(0.0, &mixture_profile(), &sched, &ForwardProcess::edm(), &grid, &e, r).is_err());
    }
    assert!(thm4_bound_delta(0.0, &mixture_profile(), &GammaSchedule::ode(), &ForwardProcess::edm(), &grid, &e, 0.5).is_err());
}
