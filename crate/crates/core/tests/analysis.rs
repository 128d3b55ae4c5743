mod common;

use common::phi_two_radius;
use proptest::prelude::*;
use splitvar::analysis::{
    check_density, exponent_admissibility, fit_full_ellipticity, fit_scalar_ellipticity, growing_second_witness,
    integrability_bookkeeping, lemma1_probe, log_spaced, tau_conditions, trace_level_curve, AnalysisError, ExponentSet,
    ProbeVerdict, Statement, TraceOptions,
};
use splitvar::{RadialDensity, ScalarDensity, SplittingDensity};

fn phi(mu: f64) -> ScalarDensity {
    ScalarDensity::phi_mu(mu).unwrap()
}

#[test]
fn scalar_fit_recovers_phi_exponents() {
    for mu in [1.2, 1.5, 2.0, 3.0] {
        let r = fit_scalar_ellipticity(&phi(mu), (0.0, 1e3), 1000).unwrap();
        assert!((r.mu_fit - mu).abs() <= 0.05, "μ={mu}: {}", r.mu_fit);
        assert!(r.lower_bound_certified && r.bounded_above);
        assert!(r.mu_fit >= r.kappa_fit);
    }
}

#[test]
fn fitted_bounds_hold_at_every_sample() {
    for f in [phi(1.5), ScalarDensity::minimal_surface(2.0).unwrap(), ScalarDensity::IteratedLog] {
        let r = fit_scalar_ellipticity(&f, (0.0, 1e3), 500).unwrap();
        for t in log_spaced(0.0, 1e3, 500) {
            let ln2 = f.ln_second_derivative(t);
            let x = t.ln_1p();
            assert!(r.ln_c1 - r.mu_fit * x <= ln2 + 1e-9, "{} lower at {t}", f.key());
            assert!(ln2 <= r.c2.ln() - r.kappa_fit * x + 1e-9, "{} upper at {t}", f.key());
        }
    }
}

#[test]
fn softplus_decays_faster_than_any_certifiable_power() {
    let r = fit_scalar_ellipticity(&ScalarDensity::Softplus, (0.0, 1e3), 500).unwrap();
    assert!(!r.lower_bound_certified);
    // oracle: h''(t) = 1/(4 cosh²(t/2)), so h''(t)(1+t)^16 → 0
    let t = 1e3_f64;
    let ln_h2 = -(4.0_f64).ln() - 2.0 * (0.5 * t - 2f64.ln() + (-t).exp().ln_1p());
    assert!(ln_h2 + 16.0 * t.ln_1p() < -400.0);
    assert!((ScalarDensity::Softplus.ln_second_derivative(t) - ln_h2).abs() < 1e-9);
}

#[test]
fn scalar_fit_rejects_thin_samples() {
    assert!(matches!(fit_scalar_ellipticity(&phi(2.0), (0.0, 1e3), 50), Err(AnalysisError::InvalidInput(_))));
    assert!(fit_scalar_ellipticity(&phi(2.0), (0.0, 10.0), 500).is_err());
}

#[test]
fn full_fit_of_splitting_and_radial_densities() {
    let s = SplittingDensity::pair(phi(1.5), phi(3.0));
    let r = fit_full_ellipticity(&s, 1e3, 200).unwrap();
    assert!((r.mu_fit - 3.0).abs() <= 0.1 && r.bounded_above);
    assert!(r.kappa_fit.abs() <= 0.1, "{}", r.kappa_fit);

    // Φ₂(|ξ|): radial eigenvalue ~ (1+r)^{-2}, tangential Φ₂'(r)/r ~ r^{-1}
    let radial = RadialDensity::new(phi(2.0)).unwrap();
    let r = fit_full_ellipticity(&radial, 1e3, 200).unwrap();
    assert!((r.mu_fit - 2.0).abs() <= 0.05, "{}", r.mu_fit);
    assert!((r.kappa_fit - 1.0).abs() <= 0.05, "{}", r.kappa_fit);
}

#[test]
fn density_check_runs_growth_first() {
    let c = check_density(&phi(1.5), (0.0, 1e3), 500).unwrap();
    assert!(c.closed_form_value && c.growth.a1 > 0.0);
    assert!(check_density(&ScalarDensity::Quadratic, (0.0, 1e3), 500).is_err());
}

#[test]
fn traced_circles_have_curvature_one_over_radius() {
    let f = RadialDensity::new(phi(2.0)).unwrap();
    for c in [0.5, 5.0, 50.0] {
        let curve = trace_level_curve(&f, c, &TraceOptions::default()).unwrap();
        let r = phi_two_radius(c);
        for p in curve.points.iter().step_by(37) {
            assert!((p[0].hypot(p[1]) - r).abs() <= 1e-9 * r);
        }
        assert!((curve.min_curvature * r - 1.0).abs() <= 1e-6);
        assert!(curve.max_relative_residual <= 1e-12);
    }
}

#[test]
fn probe_on_radial_phi_two() {
    let f = RadialDensity::new(phi(2.0)).unwrap();
    let levels = [5.0, 10.0, 20.0, 50.0];
    let p = lemma1_probe(&f, 1.0, &levels, &TraceOptions::default()).unwrap();
    assert_eq!(p.verdict, ProbeVerdict::Consistent);
    for row in p.rows() {
        let r = phi_two_radius(row.level);
        assert!((row.radius - r).abs() <= 1e-9 * r);
        assert!((row.curvature * r - 1.0).abs() <= 1e-3);
        assert!(row.contact_bound_holds && row.convex);
        // the ratio and the curvature product are closed-form on a circle
        assert!((row.ratio - r / (1.0 + r)).abs() <= 1e-6);
    }
    assert!(p.min_ratio >= 0.5);

    let q = lemma1_probe(&f, 1.5, &levels, &TraceOptions::default()).unwrap();
    assert_eq!(q.verdict, ProbeVerdict::Violated);
    // r(1+r)^{-3/2} ~ r^{-1/2}
    assert!((q.ratio_slope + 0.5).abs() < 0.1, "{}", q.ratio_slope);
}

#[test]
fn probe_on_superlinear_control_grows() {
    let f = RadialDensity::new(ScalarDensity::Quadratic).unwrap();
    let p = lemma1_probe(&f, 1.0, &[1.0, 4.0, 16.0], &TraceOptions::default()).unwrap();
    assert!(p.product_grows, "{}", p.product_slope);
}

#[test]
fn probe_rejects_unsorted_levels() {
    let f = RadialDensity::new(phi(2.0)).unwrap();
    assert!(lemma1_probe(&f, 1.0, &[5.0, 1.0], &TraceOptions::default()).is_err());
    assert!(lemma1_probe(&f, 1.0, &[], &TraceOptions::default()).is_err());
}

#[test]
fn stated_exponent_examples() {
    let e = ExponentSet { mu1: Some(1.5), gamma: Some(0.3), ..Default::default() };
    assert_eq!(exponent_admissibility(&e, 4.0).unwrap().growing_second, Some(true));
    let e = ExponentSet { mu1: Some(1.5), gamma: Some(0.34), ..Default::default() };
    assert_eq!(exponent_admissibility(&e, 4.0).unwrap().growing_second, Some(false));
    let e = ExponentSet { mu1: Some(2.5), kappa: Some(1.0), ..Default::default() };
    assert_eq!(exponent_admissibility(&e, 4.0).unwrap().balanced_regularity, Some(true));
    let e = ExponentSet { mu1: Some(1.5), mu2: Some(1.9), ..Default::default() };
    let a = exponent_admissibility(&e, 4.0).unwrap();
    assert_eq!(a.verdict(Statement::SplittingRegularity), Some(true));
    assert_eq!(a.verdict(Statement::UnboundedFirst), None);
    let b = integrability_bookkeeping(4.0, 1.5).unwrap();
    assert_eq!((b.s, b.eps_hat, b.alpha), (1.0, 0.25, 0.875));
}

proptest! {
    #[test]
    fn admissible_growing_second_has_valid_witness(mu1 in 1.0001f64..1.9999, frac in 0.0f64..0.999) {
        let bound = (2.0 - mu1) / (1.0 + (2.0 - mu1));
        let gamma = frac * bound;
        let w = growing_second_witness(mu1, gamma).expect("witness below the bound");
        prop_assert_eq!(tau_conditions(mu1, gamma, w.tau_s, w.tau_alpha), [true; 3]);
        prop_assert!(w.tau_s < 1.0 - 0.5 * mu1);
        prop_assert!((w.s - (w.tau_s - 0.5)).abs() < 1e-15 && (w.alpha - (w.tau_alpha - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn verdicts_are_monotone_in_the_exponents(mu1 in 1.01f64..3.0, d in 0.0f64..0.5, g in 0.0f64..0.9) {
        // raising μ₁ or the growth exponents can only break admissibility
        let at = |mu1: f64, g: f64| {
            let e = ExponentSet { mu1: Some(mu1), varkappa: Some(g), gamma: Some(g), kappa: Some(0.5), ..Default::default() };
            exponent_admissibility(&e, 4.0).unwrap()
        };
        let (lo, hi) = (at(mu1, g), at(mu1 + d, g + d));
        for s in Statement::ALL {
            if hi.verdict(s) == Some(true) {
                prop_assert_eq!(lo.verdict(s), Some(true), "{:?}", s);
            }
        }
    }

    #[test]
    fn balanced_witness_satisfies_window(mu1 in 1.01f64..3.0, kappa in -0.99f64..1.0, chi in 2.01f64..20.0) {
        let e = ExponentSet { mu1: Some(mu1), kappa: Some(kappa), ..Default::default() };
        let a = exponent_admissibility(&e, chi).unwrap();
        if a.balanced_regularity == Some(true) {
            let w = a.balanced.expect("witness for admissible balanced point");
            prop_assert!(w.alpha >= 0.0);
            prop_assert!(w.alpha < w.s + 0.5 * kappa);
            prop_assert!(w.s < w.alpha + 0.5 * (2.0 - mu1));
        }
    }
}
