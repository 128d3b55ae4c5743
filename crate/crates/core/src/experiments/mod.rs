//! δ → 0 regularization paths and the quantities checked along them.

mod cutoff;
mod diagnostics;
mod path;
mod presets;
mod stress;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::densities::{BaseDensity, Density, DensityError, Regularization};
use crate::solver::{Grid, SolverConfig, SolverError};

pub use cutoff::CutoffField;
pub use diagnostics::{
    caccioppoli_check, integrability_scan, path_derivatives, second_derivative_bounds, CaccioppoliRow,
    CaccioppoliSeries, IntegrabilityTable, MomentRow, SecondDerivativeBounds, SecondDerivativeRow, SATURATION_LOG,
};
pub use path::{
    dirichlet_integral, geometric_schedule, run_path, validate_schedule, PathStep, RegularizationPath, Truncation,
    MAX_PRINCIPLE_SLACK,
};
pub use presets::BoundaryPreset;
pub use stress::{
    mean_removed_deviation, perturbed_restart, stress_analysis, stress_bounds, stress_distance, stress_field,
    StressBounds, StressField, StressReport, StressStep,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment parameters: {0}")]
    InvalidParams(String),
    #[error("solve at δ = {delta} failed: {message}")]
    SolveFailed { delta: f64, message: String },
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exponents and cutoff for the interior estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Weights `α` of the second-derivative estimate, one series each.
    pub alphas: Vec<f64>,
    /// Cutoff power `l ≥ 1`.
    pub l: u32,
    /// Moment orders `χ > 2`.
    pub chis: Vec<f64>,
    /// Lower ellipticity exponent of `f₁`.
    pub mu1: f64,
    /// Growth exponent of `f₂''`; selects the variant estimate with `α > -1/2`.
    pub gamma: Option<f64>,
    pub margin: f64,
    /// Weights `(α₁, α₂)` of the Hessian energies.
    pub second_alphas: [f64; 2],
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 1.0, 2.0],
            l: 3,
            chis: vec![3.0, 4.0, 6.0, 8.0],
            mu1: 1.5,
            gamma: None,
            margin: 0.0625,
            second_alphas: [0.0, 0.0],
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidParams(m));
        if self.l < 1 {
            return bad("l ≥ 1 required".into());
        }
        if !(self.mu1 > 1.0) {
            return bad(format!("μ₁ > 1 required (got {})", self.mu1));
        }
        if self.chis.iter().any(|c| !(*c > 2.0)) {
            return bad("χ > 2 required for every moment order".into());
        }
        let floor = if self.gamma.is_some() { -0.5 } else { 0.0 };
        for &a in &self.alphas {
            let ok = if self.gamma.is_some() { a > floor } else { a >= floor };
            if !ok {
                return bad(format!(
                    "α {} {floor} required (got α = {a})",
                    if self.gamma.is_some() { ">" } else { "≥" }
                ));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return bad(format!("0 ≤ γ < 1 required (got γ = {g})"));
            }
        }
        if self.second_alphas.iter().any(|a| !(*a >= 0.0)) {
            return bad("α₁, α₂ ≥ 0 required".into());
        }
        Ok(())
    }
}

/// Which diagnostics to evaluate along the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyses {
    pub caccioppoli: bool,
    pub integrability: bool,
    pub second_derivatives: bool,
    pub stress: bool,
}

impl Analyses {
    pub const ALL: Analyses =
        Analyses { caccioppoli: true, integrability: true, second_derivatives: true, stress: true };
    pub const NONE: Analyses =
        Analyses { caccioppoli: false, integrability: false, second_derivatives: false, stress: false };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub density: serde_json::Value,
    pub regularization: Regularization,
    pub grid: Grid,
    pub preset: BoundaryPreset,
    pub schedule: Vec<f64>,
    pub params: ExperimentParams,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub steps: Vec<PathStep>,
    pub truncated: Option<Truncation>,
    pub viscosity_monotone: bool,
    /// Final over initial viscosity energy.
    pub viscosity_decay: f64,
    pub max_principle: bool,
    pub caccioppoli: Vec<CaccioppoliSeries>,
    pub integrability: Option<IntegrabilityTable>,
    pub second_derivatives: Option<SecondDerivativeBounds>,
    pub stress: Option<StressReport>,
}

/// Everything a run produces: the path itself, the stress fields and the
/// serializable report.
pub struct Experiment {
    pub path: RegularizationPath,
    pub stress_fields: Vec<StressField>,
    pub report: ExperimentReport,
}

/// Solves along the schedule and evaluates the selected diagnostics.
/// Diagnostics run on whatever part of the path converged.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    base: &BaseDensity,
    scheme: Regularization,
    preset: BoundaryPreset,
    grid: Grid,
    schedule: &[f64],
    params: &ExperimentParams,
    solver: &SolverConfig,
    analyses: Analyses,
) -> Result<Experiment, ExperimentError> {
    params.validate()?;
    let path = run_path(base, scheme, &preset.initial_field(grid), schedule, solver)?;
    let needs_derivs = analyses.caccioppoli || analyses.integrability || analyses.second_derivatives;
    let derivs = if needs_derivs { path_derivatives(&path)? } else { Vec::new() };
    let eta = if needs_derivs { Some(CutoffField::new(grid, params.margin)?) } else { None };
    let deltas = path.deltas().to_vec();

    let mut caccioppoli = Vec::new();
    let mut integrability = None;
    let mut second_derivatives = None;
    if let Some(eta) = &eta {
        if analyses.caccioppoli {
            for &a in &params.alphas {
                caccioppoli.push(caccioppoli_check(&derivs, &deltas, eta, a, params.l, params.mu1, params.gamma)?);
            }
        }
        if analyses.integrability {
            integrability = Some(integrability_scan(&derivs, &deltas, eta, &params.chis, params.l, params.mu1)?);
        }
        if analyses.second_derivatives {
            second_derivatives = Some(second_derivative_bounds(&path, &derivs, eta, params.second_alphas)?);
        }
    }
    let (stress, stress_fields) = if analyses.stress {
        let (r, f) = stress_analysis(&path, params.margin)?;
        (Some(r), f)
    } else {
        (None, Vec::new())
    };
    let first = path.steps.first().map_or(0.0, |s| s.viscosity_energy);
    let last = path.steps.last().map_or(0.0, |s| s.viscosity_energy);
    let report = ExperimentReport {
        provenance: Provenance {
            density: base.descriptor(),
            regularization: scheme,
            grid,
            preset,
            schedule: schedule.to_vec(),
            params: params.clone(),
            solver: *solver,
        },
        steps: path.steps.clone(),
        truncated: path.truncated.clone(),
        viscosity_monotone: path.viscosity_monotone(),
        viscosity_decay: if first > 0.0 { last / first } else { 0.0 },
        max_principle: path.steps.iter().all(|s| s.max_principle),
        caccioppoli,
        integrability,
        second_derivatives,
        stress,
    };
    Ok(Experiment { path, stress_fields, report })
}

impl ExperimentReport {
    /// One row per completed δ.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "delta",
            "viscosity_energy",
            "energy",
            "sup_norm",
            "l1_increment",
            "iterations",
            "residual",
            "max_principle",
        ]
        .map(String::from)
        .to_vec();
        for s in &self.caccioppoli {
            for col in ["lhs", "rhs", "ratio"] {
                header.push(format!("caccioppoli_alpha{}_{col}", s.alpha));
            }
        }
        if let Some(t) = &self.integrability {
            for c in &t.chis {
                header.push(format!("ln_moment_gamma1_chi{c}"));
                header.push(format!("ln_moment_gamma2_chi{c}"));
                header.push(format!("bootstrap_ratio_chi{c}"));
            }
        }
        if self.second_derivatives.is_some() {
            for col in ["weighted_1", "weighted_2", "hessian_l2", "gradient_sup"] {
                header.push(col.into());
            }
        }
        if self.stress.is_some() {
            header.push("stress_min_margin".into());
            header.push("stress_increment".into());
        }
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (k, s) in self.steps.iter().enumerate() {
            let mut row = vec![
                s.delta.to_string(),
                s.viscosity_energy.to_string(),
                s.energy.to_string(),
                s.sup_norm.to_string(),
                opt(s.l1_increment),
                s.iterations.to_string(),
                s.residual.to_string(),
                s.max_principle.to_string(),
            ];
            for c in &self.caccioppoli {
                let r = &c.rows[k];
                row.extend([r.lhs, r.rhs, r.ratio].map(|v| v.to_string()));
            }
            if let Some(t) = &self.integrability {
                let r = &t.rows[k];
                for c in 0..t.chis.len() {
                    row.extend([r.ln_gamma1[c], r.ln_gamma2[c], r.bootstrap_ratio[c]].map(|v| v.to_string()));
                }
            }
            if let Some(b) = &self.second_derivatives {
                let r = &b.rows[k];
                row.extend([r.weighted[0], r.weighted[1], r.hessian_l2, r.gradient_sup].map(|v| v.to_string()));
            }
            if let Some(st) = &self.stress {
                let r = &st.steps[k];
                row.push(r.min_margin.to_string());
                row.push(opt(r.successive_distance));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{ScalarDensity, SplittingDensity};

    fn phi_pair(m1: f64, m2: f64) -> BaseDensity {
        SplittingDensity::pair(ScalarDensity::phi_mu(m1).unwrap(), ScalarDensity::phi_mu(m2).unwrap()).into()
    }

    #[test]
    fn schedules() {
        let s = geometric_schedule(0.1, 0.1, 1e-4).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[3], 1e-4);
        let t = geometric_schedule(0.1, 1.0 / 3.0, 1e-4).unwrap();
        assert_eq!(*t.last().unwrap(), 1e-4);
        assert!(validate_schedule(&t).is_ok());
        assert!(validate_schedule(&[0.1, 0.1]).is_err());
        assert!(validate_schedule(&[0.1, -0.1]).is_err());
    }

    #[test]
    fn affine_path_is_trivial() {
        let grid = Grid::unit_square(17).unwrap();
        let preset = BoundaryPreset::Affine { a: 0.0, b: 1.0, c: 0.5 };
        let schedule = [1e-1, 1e-2, 1e-3];
        let exp = run_experiment(
            &phi_pair(2.0, 2.0),
            Regularization::Quadratic,
            preset,
            grid,
            &schedule,
            &ExperimentParams::default(),
            &SolverConfig::default(),
            Analyses::ALL,
        )
        .unwrap();
        let r = &exp.report;
        for (s, &d) in r.steps.iter().zip(&schedule) {
            assert!((s.viscosity_energy - d * 1.25).abs() < 1e-12, "{s:?}");
            if let Some(inc) = s.l1_increment {
                assert!(inc < 1e-12);
            }
        }
        for c in &r.caccioppoli {
            assert!(c.rows.iter().all(|row| row.lhs.abs() < 1e-16));
        }
        // constant ∂₁u = 1: every moment is δ-independent
        let t = r.integrability.as_ref().unwrap();
        assert!(t.trend_gamma1.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(r.stress.as_ref().unwrap().contained);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn unit_slope_stress_margin() {
        let grid = Grid::unit_square(9).unwrap();
        let base = phi_pair(2.0, 2.0);
        let path = run_path(
            &base,
            Regularization::Quadratic,
            &BoundaryPreset::Affine { a: 0.0, b: 1.0, c: 0.0 }.initial_field(grid),
            &[1e-2],
            &SolverConfig::default(),
        )
        .unwrap();
        let (report, fields) = stress_analysis(&path, 0.1).unwrap();
        assert!(fields[0].base.iter().all(|s| (s[0] - 0.5).abs() < 1e-12 && s[1] == 0.0));
        assert!((report.steps[0].min_margin - 0.5).abs() < 1e-3);
    }

    #[test]
    fn params_validation() {
        let mut p = ExperimentParams::default();
        assert!(p.validate().is_ok());
        p.alphas = vec![-0.25];
        assert!(p.validate().is_err());
        p.gamma = Some(0.2);
        assert!(p.validate().is_ok());
        p.chis = vec![2.0];
        assert!(p.validate().is_err());
    }
}
