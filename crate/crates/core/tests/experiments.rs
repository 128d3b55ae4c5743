use std::f64::consts::PI;

use splitvar::experiments::{
    caccioppoli_check, geometric_schedule, integrability_scan, mean_removed_deviation, path_derivatives,
    perturbed_restart, run_experiment, run_path, stress_bounds, stress_field, Analyses, BoundaryPreset, CutoffField,
    ExperimentParams, ExperimentReport,
};
use splitvar::solver::{minimize, DiscreteField, Grid, SolveStatus, SolverConfig};
use splitvar::{BaseDensity, Regularization, RegularizedDensity, ScalarDensity, SplittingDensity};

fn phi(mu: f64) -> ScalarDensity {
    ScalarDensity::phi_mu(mu).unwrap()
}

fn split(m1: f64, m2: f64) -> BaseDensity {
    SplittingDensity::pair(phi(m1), phi(m2)).into()
}

fn schedule() -> Vec<f64> {
    geometric_schedule(0.1, 0.1, 1e-4).unwrap()
}

fn experiment(
    base: BaseDensity,
    preset: BoundaryPreset,
    n: usize,
    params: &ExperimentParams,
) -> splitvar::experiments::Experiment {
    run_experiment(
        &base,
        Regularization::Quadratic,
        preset,
        Grid::unit_square(n).unwrap(),
        &schedule(),
        params,
        &SolverConfig::default(),
        Analyses::ALL,
    )
    .unwrap()
}

/// `ρ` of the cutoff, written out independently: smoothstep between the
/// margin and the quarter point of `[0, 1]`.
fn rho(t: f64, margin: f64) -> f64 {
    let d = t.min(1.0 - t);
    if d <= margin {
        0.0
    } else if d >= 0.25 {
        1.0
    } else {
        let s = (d - margin) / (0.25 - margin);
        s * s * (3.0 - 2.0 * s)
    }
}

#[test]
fn affine_path_is_exact() {
    let (b, c) = (1.0, 2.0);
    let e = experiment(split(1.5, 3.0), BoundaryPreset::Affine { a: 1.0, b, c }, 33, &ExperimentParams::default());
    let g = e.report.provenance.grid;
    let exact = DiscreteField::from_fn(g, |x, y| 1.0 + b * x + c * y);
    for (u, step) in e.path.solutions.iter().zip(&e.report.steps) {
        assert!(u.values.iter().zip(&exact.values).all(|(p, q)| (p - q).abs() <= 1e-10));
        let expected = step.delta * (b * b + c * c) * g.area();
        assert!((step.viscosity_energy - expected).abs() <= 1e-10 * expected);
        assert!(step.l1_increment.is_none_or(|d| d <= 1e-10));
    }
    for s in &e.report.caccioppoli {
        assert!(s.rows.iter().all(|r| r.lhs.abs() <= 1e-12), "α={}", s.alpha);
    }
    let sd = e.report.second_derivatives.as_ref().unwrap();
    assert!(sd.max_hessian_l2 <= 1e-8);
}

#[test]
fn constant_slope_moments_match_closed_form() {
    let (b, l) = (1.5, 3u32);
    let params = ExperimentParams { l, ..Default::default() };
    let e = experiment(split(2.0, 2.0), BoundaryPreset::Affine { a: 0.0, b, c: 0.0 }, 33, &params);
    let g = e.report.provenance.grid;
    let mut cut_integral = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let eta = (rho(g.x(i), params.margin) * rho(g.y(j), params.margin)).powi(2);
            cut_integral += eta.powi(2 * l as i32) * g.hx() * g.hy();
        }
    }
    let table = e.report.integrability.as_ref().unwrap();
    for row in &table.rows {
        for (chi, ln_m) in table.chis.iter().zip(&row.ln_gamma1) {
            let oracle = 0.5 * chi * (1.0 + b * b).ln() + cut_integral.ln();
            assert!((ln_m - oracle).abs() <= 1e-10, "χ={chi}: {ln_m} vs {oracle}");
        }
    }
    assert!(table.trend_gamma1.iter().all(|t| (t - 1.0).abs() <= 1e-10));
}

#[test]
fn zero_data_gives_zero_path() {
    let e = experiment(
        split(1.5, 3.0),
        BoundaryPreset::Affine { a: 0.0, b: 0.0, c: 0.0 },
        17,
        &ExperimentParams::default(),
    );
    for s in &e.report.steps {
        assert_eq!((s.viscosity_energy, s.sup_norm), (0.0, 0.0));
    }
    for f in &e.stress_fields {
        assert!(f.base.iter().all(|s| s[0] == 0.0 && s[1] == 0.0));
    }
}

#[test]
fn sine_preset_diagnostics() {
    let e = experiment(split(1.5, 3.0), BoundaryPreset::Sine, 33, &ExperimentParams::default());
    let r = &e.report;
    assert!(r.truncated.is_none() && r.viscosity_monotone && r.max_principle);
    // moments are non-decreasing in χ at fixed δ since Γ₁ ≥ 1
    for row in &r.integrability.as_ref().unwrap().rows {
        assert!(row.ln_gamma1.windows(2).all(|w| w[1] >= w[0]));
        assert!(row.ln_gamma2.windows(2).all(|w| w[1] >= w[0]));
        assert!(row.bootstrap_ratio.iter().all(|b| b.is_finite() && *b > 0.0));
    }
    for s in &r.caccioppoli {
        assert!(s.spread < 100.0 && s.max_ratio.is_finite());
    }
    assert!(r.stress.as_ref().unwrap().contained);
}

#[test]
fn caccioppoli_ratio_is_stable_for_phi_two() {
    let params = ExperimentParams { alphas: vec![1.0], l: 2, ..Default::default() };
    let e = experiment(split(2.0, 2.0), BoundaryPreset::Sine, 33, &params);
    let s = &e.report.caccioppoli[0];
    assert!(s.spread < 10.0, "{}", s.spread);

    // the edge case α = 0, l = 1 still yields a finite positive ratio
    let derivs = path_derivatives(&e.path).unwrap();
    let eta = CutoffField::new(e.report.provenance.grid, params.margin).unwrap();
    let edge = caccioppoli_check(&derivs, e.path.deltas(), &eta, 0.0, 1, 2.0, None).unwrap();
    assert!(edge.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
}

#[test]
fn growing_second_variant_accepts_negative_alpha() {
    let params = ExperimentParams { alphas: vec![-0.25, 0.5], gamma: Some(0.2), ..Default::default() };
    let e = run_experiment(
        &split(1.5, 1.5),
        Regularization::SplitPower { gamma: 0.2 },
        BoundaryPreset::Sine,
        Grid::unit_square(17).unwrap(),
        &schedule(),
        &params,
        &SolverConfig::default(),
        Analyses { caccioppoli: true, ..Analyses::NONE },
    )
    .unwrap();
    for s in &e.report.caccioppoli {
        assert_eq!(s.gamma, Some(0.2));
        assert!(s.rows.iter().all(|r| r.rhs >= 1.0 && r.ratio.is_finite()));
    }
    let bad = ExperimentParams { alphas: vec![-0.25], ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn gradient_bound_is_uniform_in_the_subquadratic_regime() {
    let e = experiment(split(1.5, 1.5), BoundaryPreset::Sine, 33, &ExperimentParams::default());
    let sd = e.report.second_derivatives.as_ref().unwrap();
    assert!(sd.gradient_sup_variation < 2.0, "{}", sd.gradient_sup_variation);
}

#[test]
fn contrast_run_is_reported_without_verdict() {
    let e = experiment(split(1.5, 4.0), BoundaryPreset::Sine, 33, &ExperimentParams::default());
    let sd = e.report.second_derivatives.as_ref().unwrap();
    assert!(sd.rows.iter().all(|r| r.weighted.iter().all(|w| w.is_finite())));
    assert!(e.report.integrability.as_ref().unwrap().trend_gamma2.iter().all(|t| t.is_finite()));
}

#[test]
fn viscosity_is_monotone_for_every_preset() {
    for preset in
        [BoundaryPreset::Affine { a: 1.0, b: 1.0, c: 2.0 }, BoundaryPreset::Sine, BoundaryPreset::Kink { eps: 0.05 }]
    {
        for base in [split(1.5, 3.0), split(1.5, 1.5)] {
            let init = preset.initial_field(Grid::unit_square(33).unwrap());
            let path =
                run_path(&base, Regularization::Quadratic, &init, &schedule(), &SolverConfig::default()).unwrap();
            assert!(path.truncated.is_none() && path.viscosity_monotone(), "{preset:?}");
            assert!(path.steps.iter().all(|s| s.max_principle));
        }
    }
}

#[test]
fn stress_is_diagonal_for_splitting_densities() {
    let g = Grid::unit_square(17).unwrap();
    let f = RegularizedDensity::new(split(1.5, 3.0), 1e-2, Regularization::Quadratic).unwrap();
    let c = 0.7;
    let u = DiscreteField::from_fn(g, |x, y| (3.0 * x).sin() + c * y);
    let s = stress_field(&f, &u);
    let expected = phi(3.0).first_derivative(c) + 1e-2 * c;
    assert!(s.sigma.iter().all(|v| (v[1] - expected).abs() <= 1e-12));
}

#[test]
fn stress_margin_of_unit_slope() {
    let g = Grid::unit_square(9).unwrap();
    let base = split(2.0, 2.0);
    let f = RegularizedDensity::new(base.clone(), 1e-2, Regularization::Quadratic).unwrap();
    let s = stress_field(&f, &DiscreteField::from_fn(g, |x, _| x));
    let bounds = stress_bounds(&base).unwrap();
    for b in &s.base {
        // Φ₂'(t) = 1 - 1/(1+t)
        assert!((b[0] - 0.5).abs() <= 1e-12 && b[1] == 0.0);
        assert!((bounds.margin(&base, *b) - 0.5).abs() <= 1e-3);
    }
}

#[test]
fn uniqueness_checks() {
    let g = Grid::unit_square(33).unwrap();
    let f = RegularizedDensity::new(split(1.5, 1.5), 1e-3, Regularization::Quadratic).unwrap();
    let init = BoundaryPreset::Sine.initial_field(g);
    let cfg = SolverConfig::default();
    let (u, rep) = minimize(&f, &init, &cfg).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    let (v, _) = minimize(&f, &init, &cfg).unwrap();
    assert_eq!(mean_removed_deviation(&u, &v).unwrap(), 0.0);
    let d = perturbed_restart(&f, &u, 1e-2, 42, &cfg).unwrap();
    assert!(d <= 1e-6, "{d:.2e}");

    let run = |ratio: f64| {
        let s = geometric_schedule(0.1, ratio, 1e-4).unwrap();
        run_path(&split(1.5, 1.5), Regularization::Quadratic, &init, &s, &cfg).unwrap()
    };
    let (a, b) = (run(0.1), run(1.0 / 3.0));
    let dev = mean_removed_deviation(a.final_solution().unwrap(), b.final_solution().unwrap()).unwrap();
    assert!(dev <= 1e-3, "{dev:.2e}");
}

#[test]
fn failed_solves_truncate_the_path() {
    let init = BoundaryPreset::Sine.initial_field(Grid::unit_square(17).unwrap());
    let cfg = SolverConfig { max_iter: 1, ..Default::default() };
    let path = run_path(&split(1.5, 3.0), Regularization::Quadratic, &init, &schedule(), &cfg).unwrap();
    let t = path.truncated.as_ref().expect("one Newton step cannot converge");
    assert_eq!(t.report.status, SolveStatus::MaxIterations);
    assert_eq!(path.solutions.len(), path.steps.len());
    assert!(path.solutions.len() < schedule().len());
}

#[test]
fn report_serializes_one_row_per_delta() {
    let e = experiment(split(1.5, 3.0), BoundaryPreset::Sine, 17, &ExperimentParams::default());
    let mut csv = Vec::new();
    e.report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + e.report.steps.len());
    let json = serde_json::to_string(&e.report).unwrap();
    let back: ExperimentReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.steps.len(), e.report.steps.len());
    assert_eq!(back.provenance.preset, BoundaryPreset::Sine);
}

#[test]
fn moment_scan_rejects_small_chi() {
    let e = experiment(split(1.5, 3.0), BoundaryPreset::Sine, 17, &ExperimentParams::default());
    let derivs = path_derivatives(&e.path).unwrap();
    let eta = CutoffField::new(e.report.provenance.grid, 0.0625).unwrap();
    assert!(integrability_scan(&derivs, e.path.deltas(), &eta, &[2.0], 3, 1.5).is_err());
}

#[test]
fn preset_values() {
    assert!((BoundaryPreset::Sine.eval(0.25, 0.5) - 0.5 * (PI / 2.0).sin()).abs() < 1e-15);
    assert!((BoundaryPreset::Kink { eps: 0.0 }.eval(0.0, 0.3) - 1.0).abs() < 1e-15);
}
