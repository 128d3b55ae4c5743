mod common;

use std::collections::BTreeMap;

use common::phi_mu_quadrature;
use proptest::prelude::*;
use splitvar::densities::{
    default_appendix_examples, growth_constants, recession, sym_eigenvalues, symmetric_samples, GrowthConstants,
};
use splitvar::{
    BaseDensity, Density, RadialDensity, Regularization, RegularizedDensity, ScalarDensity, SplittingDensity,
};

fn phi(mu: f64) -> ScalarDensity {
    ScalarDensity::phi_mu(mu).unwrap()
}

fn catalog() -> Vec<ScalarDensity> {
    let mut v = vec![
        phi(1.2),
        phi(1.5),
        phi(2.0),
        phi(3.0),
        ScalarDensity::minimal_surface(2.0).unwrap(),
        ScalarDensity::minimal_surface(4.0).unwrap(),
    ];
    v.extend(default_appendix_examples());
    v
}

fn samples() -> Vec<f64> {
    let mut ts = symmetric_samples(0.0, 5.0, 101);
    ts.extend(symmetric_samples(5.0, 1e3, 200));
    ts
}

#[test]
fn phi_mu_matches_double_integral() {
    for mu in [1.1, 1.5, 2.0, 2.5, 3.0, 5.0] {
        let f = phi(mu);
        for k in 0..=50 {
            let t = k as f64;
            let q = phi_mu_quadrature(mu, t);
            assert!((f.value(t) - q).abs() < 1e-8, "μ={mu} t={t}: {} vs {q}", f.value(t));
            assert_eq!(f.value(-t), f.value(t));
        }
    }
}

#[test]
fn phi_two_at_one() {
    assert!((phi(2.0).value(1.0) - (1.0 - 2f64.ln())).abs() < 1e-15);
}

#[test]
fn phi_mu_second_derivative_is_exact_power() {
    for mu in [1.2, 1.5, 2.0, 3.0, 7.0] {
        let f = phi(mu);
        for t in symmetric_samples(0.0, 1e3, 500) {
            let scaled = f.second_derivative(t) * (1.0 + t.abs()).powf(mu);
            assert!((scaled - (mu - 1.0)).abs() <= 1e-10, "μ={mu} t={t}: {scaled}");
        }
    }
}

#[test]
fn derivatives_match_central_differences() {
    for f in catalog() {
        for t in samples() {
            // small step: f'' of the even extension has a kink at 0 and the
            // narrowest atoms have width 2^-20
            let h = 1e-7 * (1.0 + t.abs());
            let d1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            let d2 = (f.first_derivative(t + h) - f.first_derivative(t - h)) / (2.0 * h);
            let (e1, e2) = (f.first_derivative(t), f.second_derivative(t));
            assert!((d1 - e1).abs() <= 1e-5 * (1.0 + e1.abs()), "{} t={t}: f' {e1} vs {d1}", f.key());
            if matches!(f, ScalarDensity::Atoms(_)) {
                // checked against the Gaussian sum below
                continue;
            }
            assert!((d2 - e2).abs() <= 1e-5 * (1e-3 + e2.abs()), "{} t={t}: f'' {e2} vs {d2}", f.key());
        }
    }
}

#[test]
fn atoms_second_derivative_is_gaussian_sum() {
    let [_, _, atoms] = default_appendix_examples();
    let ScalarDensity::Atoms(a) = &atoms else { panic!("third example is the atom sum") };
    for t in samples() {
        let oracle: f64 =
            a.sigmas.iter().enumerate().map(|(k, s)| (-((t.abs() - (k + 1) as f64) / s).powi(2)).exp()).sum();
        assert!((atoms.second_derivative(t) - oracle).abs() <= 1e-14, "t={t}");
    }
}

#[test]
fn catalog_densities_are_strictly_convex_and_even() {
    for f in catalog() {
        for t in samples() {
            // (1+|t|^k)^{1/k} with k > 2 is flat at the origin; softplus
            // underflows in linear scale far out
            let positive = f.second_derivative(t) > 0.0 || f.ln_second_derivative(t).is_finite();
            assert!(positive || t == 0.0, "{} t={t}", f.key());
            assert!((f.value(t) - f.value(-t)).abs() <= 1e-14 * (1.0 + f.value(t)));
        }
    }
}

#[test]
fn linear_growth_catalog_has_converged_recession() {
    for f in catalog().into_iter().filter(|f| f.key() != "iterated_log") {
        let g = growth_constants(&f, (0.0, 1e3)).unwrap_or_else(|e| panic!("{}: {e}", f.key()));
        assert!(g.a1 > 0.0 && g.a3 >= g.a1 * (1.0 - 1e-12), "{}: {g:?}", f.key());
        assert!(g.holds_at(&f, symmetric_samples(0.0, 1e3, 3000)));
    }
}

#[test]
fn softplus_satisfies_stated_growth_constants() {
    let c = GrowthConstants { a1: 0.5, a2: 0.0, a3: 1.0, a4: 1.0 };
    assert!(c.holds_at(&ScalarDensity::Softplus, symmetric_samples(0.0, 1e3, 5000)));
}

#[test]
fn quadratic_is_flagged_superlinear() {
    assert!(growth_constants(&ScalarDensity::Quadratic, (0.0, 100.0)).is_err());
}

#[test]
fn splitting_hessian_matches_gradient_differences() {
    let f = SplittingDensity::pair(phi(1.5), ScalarDensity::Softplus);
    for &xi in &[[0.0, 0.0], [1.0, -2.0], [30.0, 0.5], [-400.0, 900.0]] {
        let h = f.hessian(xi);
        assert_eq!(h[0][1], 0.0);
        assert_eq!(h[1][0], 0.0);
        for k in 0..2 {
            let s = 1e-7 * (1.0 + xi[k].abs());
            let mut p = xi;
            let mut m = xi;
            p[k] += s;
            m[k] -= s;
            let fd = (f.gradient(p)[k] - f.gradient(m)[k]) / (2.0 * s);
            assert!((fd - h[k][k]).abs() <= 1e-6 * (1e-3 + h[k][k]), "{xi:?} {k}: {fd} vs {}", h[k][k]);
        }
    }
}

#[test]
fn quadratic_regularization_shifts_eigenvalues_by_delta() {
    let base: BaseDensity = SplittingDensity::pair(phi(1.5), phi(3.0)).into();
    for delta in [1e-1, 1e-3] {
        let f = RegularizedDensity::new(base.clone(), delta, Regularization::Quadratic).unwrap();
        for &xi in &[[0.0, 0.0], [2.0, -1.0], [100.0, 7.0]] {
            let (a, b) = sym_eigenvalues(base.hessian(xi));
            let (c, d) = sym_eigenvalues(f.hessian(xi));
            assert!((c - a - delta).abs() < 1e-12 && (d - b - delta).abs() < 1e-12);
        }
    }
}

#[test]
fn recession_is_positively_homogeneous() {
    let fs: Vec<BaseDensity> = vec![
        SplittingDensity::pair(phi(1.5), phi(3.0)).into(),
        RadialDensity::new(ScalarDensity::minimal_surface(2.0).unwrap()).unwrap().into(),
    ];
    for f in &fs {
        for dir in [[1.0, 0.0], [0.6, -0.8], [-0.3, 0.2]] {
            let r1 = recession(f, dir).unwrap();
            for lambda in [2.0, 5.0] {
                let r = recession(f, [lambda * dir[0], lambda * dir[1]]).unwrap();
                assert!((r.value - lambda * r1.value).abs() <= 1e-3 * lambda * r1.value, "{dir:?} λ={lambda}");
            }
        }
    }
}

#[test]
fn catalog_round_trips() {
    for f in catalog().into_iter().filter(|f| !matches!(f, ScalarDensity::Atoms(_))) {
        let g = ScalarDensity::from_catalog(f.key(), &f.params()).unwrap();
        assert_eq!(f, g);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<ScalarDensity>(&json).unwrap(), f);
    }
}

#[test]
fn catalog_rejects_out_of_domain_parameters() {
    let p = |mu: f64| BTreeMap::from([("mu".to_string(), mu)]);
    assert!(ScalarDensity::from_catalog("phi_mu", &p(1.0)).is_err());
    assert!(ScalarDensity::from_catalog("phi_mu", &p(0.5)).is_err());
    assert!(ScalarDensity::from_catalog("phi_mu", &p(f64::NAN)).is_err());
    assert!(ScalarDensity::from_catalog("no_such_density", &BTreeMap::new()).is_err());
}

proptest! {
    #[test]
    fn phi_mu_is_convex_even_and_nonnegative(mu in 1.01f64..6.0, t in -1e3f64..1e3, s in -1e3f64..1e3) {
        let f = phi(mu);
        prop_assert!(f.value(t) >= 0.0);
        prop_assert_eq!(f.value(t), f.value(-t));
        let m = 0.5 * (t + s);
        prop_assert!(f.value(m) <= 0.5 * (f.value(t) + f.value(s)) + 1e-12 * (1.0 + f.value(t) + f.value(s)));
        prop_assert!(f.first_derivative(t).abs() < 1.0);
    }

    #[test]
    fn regularized_value_dominates_base(
        delta in 1e-6f64..1.0,
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        q in 1.1f64..3.0,
        gamma in 0.0f64..1.0,
    ) {
        let base: BaseDensity = SplittingDensity::pair(phi(1.5), phi(2.5)).into();
        for scheme in [
            Regularization::Quadratic,
            Regularization::Power { q },
            Regularization::MixedPower { q },
            Regularization::SplitPower { gamma },
        ] {
            let f = RegularizedDensity::new(base.clone(), delta, scheme).unwrap();
            prop_assert!(f.value([x, y]) >= base.value([x, y]));
            let (lo, _) = sym_eigenvalues(f.hessian([x, y]));
            prop_assert!(lo > 0.0);
        }
    }

    #[test]
    fn regularized_gradient_matches_value_differences(
        delta in 1e-3f64..1.0,
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
        gamma in 0.0f64..1.0,
    ) {
        let base: BaseDensity = SplittingDensity::pair(phi(1.5), phi(3.0)).into();
        let f = RegularizedDensity::new(base, delta, Regularization::SplitPower { gamma }).unwrap();
        let g = f.gradient([x, y]);
        for k in 0..2 {
            let h = 1e-6 * (1.0 + [x, y][k].abs());
            let mut p = [x, y];
            let mut m = [x, y];
            p[k] += h;
            m[k] -= h;
            let fd = (f.value(p) - f.value(m)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()));
        }
    }
}
