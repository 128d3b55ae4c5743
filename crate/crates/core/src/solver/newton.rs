use serde::{Deserialize, Serialize};

use super::assembly::{assemble, energy_of, residual_norm};
use super::linalg::pcg;
use super::{DiscreteField, SolverError};
use crate::densities::Density;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the Euler residual is at most `tol·(1 + r₀)`.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Relative tolerance of the conjugate-gradient fallback.
    pub cg_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, armijo: 1e-4, max_halvings: 50, cg_tol: 1e-10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(SolverError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy: f64,
    pub residual: f64,
    pub initial_residual: f64,
    /// Residual threshold actually applied.
    pub threshold: f64,
    pub backtracks: usize,
    /// Newton systems solved by conjugate gradients after a failed factorization.
    pub cg_fallbacks: usize,
    pub status: SolveStatus,
    pub message: Option<String>,
    /// Energy at each iterate, starting with the initial one.
    pub energy_history: Vec<f64>,
}

/// Below this Newton decrement (relative to the energy) differences in
/// energy are roundoff and the full step is taken.
const ROUNDOFF_DECREMENT: f64 = 1e-12;

/// Damped Newton on the interior unknowns. The boundary values of `initial`
/// are the Dirichlet data; its interior is the starting iterate.
pub fn minimize<D: Density + ?Sized>(
    f: &D,
    initial: &DiscreteField,
    cfg: &SolverConfig,
) -> Result<(DiscreteField, SolveReport), SolverError> {
    cfg.validate()?;
    let g = initial.grid;
    let mut u = initial.clone();
    let mut report = SolveReport {
        iterations: 0,
        energy: f64::NAN,
        residual: f64::NAN,
        initial_residual: f64::NAN,
        threshold: f64::NAN,
        backtracks: 0,
        cg_fallbacks: 0,
        status: SolveStatus::Failed,
        message: None,
        energy_history: Vec::new(),
    };
    let fail = |mut report: SolveReport, u: DiscreteField, msg: String| {
        report.status = SolveStatus::Failed;
        report.message = Some(msg);
        Ok((u, report))
    };
    loop {
        let a = match assemble(f, &u, true) {
            Ok(a) => a,
            Err(e) => return fail(report, u, e.to_string()),
        };
        let r = residual_norm(&g, &a.gradient);
        if report.iterations == 0 {
            report.initial_residual = r;
            report.threshold = cfg.tol * (1.0 + r);
        }
        report.energy = a.energy;
        report.residual = r;
        report.energy_history.push(a.energy);
        if r <= report.threshold {
            report.status = SolveStatus::Converged;
            return Ok((u, report));
        }
        if report.iterations >= cfg.max_iter {
            report.status = SolveStatus::MaxIterations;
            return Ok((u, report));
        }
        let h = a.hessian.expect("assembled with Hessian");
        let rhs: Vec<f64> = a.gradient.iter().map(|v| -v).collect();
        let mut p = match h.cholesky() {
            Some(l) => l.cholesky_solve(&rhs),
            None => {
                report.cg_fallbacks += 1;
                let cg = pcg(&h, &rhs, cfg.cg_tol, 10 * h.n.max(100));
                if !cg.converged {
                    return fail(
                        report,
                        u,
                        format!(
                            "Hessian solve broke down: no Cholesky factor, CG residual {:.3e} after {} iterations",
                            cg.relative_residual, cg.iterations
                        ),
                    );
                }
                cg.x
            }
        };
        let mut slope: f64 = a.gradient.iter().zip(&p).map(|(g, p)| g * p).sum();
        if !(slope < 0.0) {
            // not a descent direction: scaled steepest descent
            let d = h.diagonal();
            p = a.gradient.iter().zip(&d).map(|(g, d)| -g / d.max(f64::MIN_POSITIVE)).collect();
            slope = a.gradient.iter().zip(&p).map(|(g, p)| g * p).sum();
        }
        let x0 = u.interior_values();
        let mut trial = u.clone();
        let mut t = 1.0;
        let mut halvings = 0;
        let roundoff = -slope <= ROUNDOFF_DECREMENT * (1.0 + a.energy.abs());
        loop {
            let x: Vec<f64> = x0.iter().zip(&p).map(|(x, p)| x + t * p).collect();
            trial.set_interior(&x);
            if roundoff {
                break;
            }
            let e = energy_of(f, &g, &trial.values).unwrap_or(f64::INFINITY);
            if e <= a.energy + cfg.armijo * t * slope {
                break;
            }
            halvings += 1;
            if halvings > cfg.max_halvings {
                report.backtracks += halvings;
                return fail(report, u, format!("line search: no decrease after {} halvings", cfg.max_halvings));
            }
            t *= 0.5;
        }
        report.backtracks += halvings;
        u = trial;
        report.iterations += 1;
    }
}
