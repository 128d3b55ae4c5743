use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::densities::{BaseDensity, Regularization, RegularizedDensity};
use crate::solver::{cell_gradients, minimize, DiscreteField, SolveReport, SolveStatus, SolverConfig};

/// Slack allowed by the discrete maximum principle check.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-8;

/// `10⁻¹, 10⁻², …` down to `terminal`, or any ratio; the terminal value is
/// appended if the geometric sequence skips it.
pub fn geometric_schedule(start: f64, ratio: f64, terminal: f64) -> Result<Vec<f64>, ExperimentError> {
    if !(start > 0.0 && start <= 1.0 && ratio > 0.0 && ratio < 1.0 && terminal > 0.0 && terminal <= start) {
        return Err(ExperimentError::InvalidParams(format!(
            "schedule needs 1 ≥ start ≥ terminal > 0 and ratio in (0, 1) (got {start}, {ratio}, {terminal})"
        )));
    }
    let mut out = vec![start];
    loop {
        let next = out[out.len() - 1] * ratio;
        if next < terminal * (1.0 + 1e-9) {
            break;
        }
        out.push(next);
    }
    let last = out[out.len() - 1];
    if (last - terminal).abs() > 1e-9 * terminal {
        out.push(terminal);
    } else {
        let n = out.len();
        out[n - 1] = terminal;
    }
    Ok(out)
}

pub fn validate_schedule(schedule: &[f64]) -> Result<(), ExperimentError> {
    if schedule.is_empty() {
        return Err(ExperimentError::InvalidParams("empty δ schedule".into()));
    }
    if schedule.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(ExperimentError::InvalidParams("δ ∈ (0, 1] required for every schedule entry".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(ExperimentError::InvalidParams("δ schedule must be strictly decreasing".into()));
    }
    Ok(())
}

/// Per-δ quantities of the vanishing-viscosity argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub delta: f64,
    /// `δ ∫ |∇u_δ|²`.
    pub viscosity_energy: f64,
    pub energy: f64,
    pub sup_norm: f64,
    /// `∫ |u_δ - u_{δ'}|` to the previous step.
    pub l1_increment: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
    pub max_principle: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Path truncated at a solve that did not converge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub delta: f64,
    pub report: SolveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationPath {
    pub base: BaseDensity,
    pub scheme: Regularization,
    pub schedule: Vec<f64>,
    pub solutions: Vec<DiscreteField>,
    pub reports: Vec<SolveReport>,
    pub steps: Vec<PathStep>,
    pub truncated: Option<Truncation>,
}

impl RegularizationPath {
    /// Regularized density at step `k`.
    pub fn density(&self, k: usize) -> RegularizedDensity {
        RegularizedDensity { base: self.base.clone(), delta: self.schedule[k], scheme: self.scheme }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.schedule[..self.solutions.len()]
    }

    /// Non-increasing viscosity energy along the completed steps (relative
    /// slack 10⁻⁹).
    pub fn viscosity_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].viscosity_energy <= w[0].viscosity_energy * (1.0 + 1e-9) + 1e-300)
    }

    pub fn final_solution(&self) -> Option<&DiscreteField> {
        self.solutions.last()
    }
}

/// `∫ |∇u|²` with the corner quadrature of the energy.
pub fn dirichlet_integral(u: &DiscreteField) -> f64 {
    let w = 0.25 * u.grid.hx() * u.grid.hy();
    cell_gradients(u).iter().map(|cell| cell.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>()).sum::<f64>() * w
}

/// Solves along the schedule, each step warm-started from the previous one.
/// `initial` carries the boundary data and the first iterate.
pub fn run_path(
    base: &BaseDensity,
    scheme: Regularization,
    initial: &DiscreteField,
    schedule: &[f64],
    cfg: &SolverConfig,
) -> Result<RegularizationPath, ExperimentError> {
    validate_schedule(schedule)?;
    let mut path = RegularizationPath {
        base: base.clone(),
        scheme,
        schedule: schedule.to_vec(),
        solutions: Vec::new(),
        reports: Vec::new(),
        steps: Vec::new(),
        truncated: None,
    };
    let (lo, hi) = initial.boundary_range();
    let mut current = initial.clone();
    for &delta in schedule {
        let f = RegularizedDensity::new(base.clone(), delta, scheme)?;
        let (u, report) = minimize(&f, &current, cfg)?;
        if report.status != SolveStatus::Converged {
            path.truncated = Some(Truncation { delta, report });
            break;
        }
        let (min_value, max_value) =
            u.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        path.steps.push(PathStep {
            delta,
            viscosity_energy: delta * dirichlet_integral(&u),
            energy: report.energy,
            sup_norm: u.sup_norm(),
            l1_increment: path.solutions.last().map(|prev| u.l1_distance(prev)),
            min_value,
            max_value,
            max_principle: min_value >= lo - MAX_PRINCIPLE_SLACK && max_value <= hi + MAX_PRINCIPLE_SLACK,
            iterations: report.iterations,
            residual: report.residual,
        });
        current = u.clone();
        path.solutions.push(u);
        path.reports.push(report);
    }
    Ok(path)
}
