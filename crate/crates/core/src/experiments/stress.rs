use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, RegularizationPath};
use crate::densities::{scalar_recession, BaseDensity, Density, RegularizedDensity};
use crate::solver::{cell_gradients, minimize, DiscreteField, Grid, SolveStatus, SolverConfig};

/// Cell-averaged stress `Df_δ(∇u)` and its base-density part `Df(∇u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressField {
    pub delta: f64,
    pub grid: Grid,
    /// Cell-major, `cell = j·(n_x-1) + i`.
    pub sigma: Vec<[f64; 2]>,
    pub base: Vec<[f64; 2]>,
}

pub fn stress_field(f: &RegularizedDensity, u: &DiscreteField) -> StressField {
    let (sigma, base) = cell_gradients(u)
        .iter()
        .map(|corners| {
            let mut s = [0.0; 2];
            let mut b = [0.0; 2];
            for g in corners {
                let ds = f.gradient(*g);
                let db = f.base.gradient(*g);
                for k in 0..2 {
                    s[k] += 0.25 * ds[k];
                    b[k] += 0.25 * db[k];
                }
            }
            (s, b)
        })
        .unzip();
    StressField { delta: f.delta, grid: u.grid, sigma, base }
}

/// Cells whose centre lies at least `margin` from the boundary.
fn interior_cells(g: &Grid, margin: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let x = g.x_min + (i as f64 + 0.5) * g.hx();
            let y = g.y_min + (j as f64 + 0.5) * g.hy();
            let d = (x - g.x_min).min(g.x_max - x).min(y - g.y_min).min(g.y_max - y);
            if d >= margin {
                out.push(j * (g.nx - 1) + i);
            }
        }
    }
    out
}

/// `sup |σ_a - σ_b|` (max-norm per component) over interior cells.
pub fn stress_distance(a: &StressField, b: &StressField, margin: f64) -> Result<f64, ExperimentError> {
    if a.grid != b.grid {
        return Err(ExperimentError::InvalidParams("stress fields live on different grids".into()));
    }
    Ok(interior_cells(&a.grid, margin)
        .into_iter()
        .map(|c| (a.sigma[c][0] - b.sigma[c][0]).abs().max((a.sigma[c][1] - b.sigma[c][1]).abs()))
        .fold(0.0, f64::max))
}

/// Recession slopes bounding `Im f'`: `[(s₁⁻, s₁⁺), (s₂⁻, s₂⁺)]` for
/// splitting densities, the profile slope twice for radial ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressBounds {
    pub slopes: Vec<(f64, f64)>,
    pub converged: bool,
}

pub fn stress_bounds(base: &BaseDensity) -> Result<StressBounds, ExperimentError> {
    let mut slopes = Vec::new();
    let mut converged = true;
    for part in base.scalar_parts() {
        let minus = scalar_recession(part, -1.0)?;
        let plus = scalar_recession(part, 1.0)?;
        converged &= minus.converged && plus.converged;
        slopes.push((minus.value, plus.value));
    }
    Ok(StressBounds { slopes, converged })
}

impl StressBounds {
    /// Distance of a base stress to the boundary of the admissible set.
    pub fn margin(&self, base: &BaseDensity, s: [f64; 2]) -> f64 {
        let side = |(lo, hi): (f64, f64), v: f64| if v >= 0.0 { hi - v } else { lo + v };
        match base {
            BaseDensity::Splitting(_) => side(self.slopes[0], s[0]).min(side(self.slopes[1], s[1])),
            BaseDensity::Radial(_) => self.slopes[0].1.min(self.slopes[0].0) - s[0].hypot(s[1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressStep {
    pub delta: f64,
    pub min_margin: f64,
    /// `(i, j)` of the cell attaining the smallest margin.
    pub min_margin_cell: [usize; 2],
    /// Interior sup distance to the previous δ.
    pub successive_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub bounds: StressBounds,
    pub interior_margin: f64,
    pub steps: Vec<StressStep>,
    /// Every cell of every step strictly inside the image.
    pub contained: bool,
}

pub fn stress_analysis(
    path: &RegularizationPath,
    interior_margin: f64,
) -> Result<(StressReport, Vec<StressField>), ExperimentError> {
    let bounds = stress_bounds(&path.base)?;
    let fields: Vec<StressField> =
        path.solutions.iter().enumerate().map(|(k, u)| stress_field(&path.density(k), u)).collect();
    let mut steps = Vec::with_capacity(fields.len());
    for (k, s) in fields.iter().enumerate() {
        let mut min_margin = f64::INFINITY;
        let mut cell = 0;
        for (c, b) in s.base.iter().enumerate() {
            let m = bounds.margin(&path.base, *b);
            if m < min_margin {
                min_margin = m;
                cell = c;
            }
        }
        let nx1 = s.grid.nx - 1;
        steps.push(StressStep {
            delta: s.delta,
            min_margin,
            min_margin_cell: [cell % nx1, cell / nx1],
            successive_distance: if k > 0 { Some(stress_distance(&fields[k - 1], s, interior_margin)?) } else { None },
        });
    }
    let contained = steps.iter().all(|s| s.min_margin > 0.0);
    Ok((StressReport { bounds, interior_margin, steps, contained }, fields))
}

/// `sup |w - mean(w)|` over interior nodes for `w = u - v`.
pub fn mean_removed_deviation(u: &DiscreteField, v: &DiscreteField) -> Result<f64, ExperimentError> {
    if u.grid != v.grid {
        return Err(ExperimentError::InvalidParams("fields live on different grids".into()));
    }
    let w: Vec<f64> = u.interior_values().iter().zip(v.interior_values()).map(|(a, b)| a - b).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    Ok(w.iter().fold(0.0, |m, x| m.max((x - mean).abs())))
}

/// Re-solves at fixed δ from `solution` plus uniform interior noise of the
/// given amplitude and returns the mean-removed deviation.
pub fn perturbed_restart(
    f: &RegularizedDensity,
    solution: &DiscreteField,
    amplitude: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<f64, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> =
        solution.interior_values().iter().map(|v| v + amplitude * rng.random_range(-1.0..=1.0)).collect();
    let mut init = solution.clone();
    init.set_interior(&start);
    let (u, report) = minimize(f, &init, cfg)?;
    if report.status != SolveStatus::Converged {
        return Err(ExperimentError::SolveFailed {
            delta: f.delta,
            message: report.message.unwrap_or_else(|| format!("{:?}", report.status)),
        });
    }
    mean_removed_deviation(&u, solution)
}
