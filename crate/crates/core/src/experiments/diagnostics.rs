use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CutoffField, ExperimentError, RegularizationPath};
use crate::densities::Density;
use crate::solver::{directional_derivatives, NodalDerivatives};

/// Above this `ln M` a moment is reported as saturated.
pub const SATURATION_LOG: f64 = 700.0;

/// Centered derivatives of every solution on the path, computed in parallel.
pub fn path_derivatives(path: &RegularizationPath) -> Result<Vec<NodalDerivatives>, ExperimentError> {
    path.solutions.par_iter().map(|u| directional_derivatives(u).map_err(ExperimentError::from)).collect()
}

/// `(η, ∇η)` at interior nodes in interior index order.
fn interior_cutoff(eta: &CutoffField) -> Vec<(f64, [f64; 2])> {
    let g = eta.grid;
    let mut out = Vec::with_capacity(g.interior_count());
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.idx(i, j);
            out.push((eta.values[k], eta.gradient[k]));
        }
    }
    out
}

fn check_grid(eta: &CutoffField, d: &NodalDerivatives) -> Result<(), ExperimentError> {
    if eta.grid != d.grid {
        return Err(ExperimentError::InvalidParams("cutoff and solution grids differ".into()));
    }
    Ok(())
}

/// `ln Σ exp(t_k)`, or `-∞` for an empty sum.
fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let t: Vec<f64> = terms.filter(|v| *v > f64::NEG_INFINITY).collect();
    let m = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + t.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Both sides of the weighted second-derivative estimate at one δ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliRow {
    pub delta: f64,
    /// `∫ η^{2l} Γ₁^{α-μ₁/2} |∂₁₁u|²`.
    pub lhs: f64,
    /// `∫ |∇η|² η^{2l-2} Γ₁^{α+1}`, plus `1 + ∫ |∇η|² η^{2l-2} Γ₁^{(α+1)/(1-γ)}`
    /// in the growing-`f₂''` variant.
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliSeries {
    pub alpha: f64,
    pub l: u32,
    pub gamma: Option<f64>,
    pub rows: Vec<CaccioppoliRow>,
    /// Largest over smallest positive ratio across the schedule.
    pub spread: f64,
    pub max_ratio: f64,
}

pub fn caccioppoli_check(
    derivs: &[NodalDerivatives],
    deltas: &[f64],
    eta: &CutoffField,
    alpha: f64,
    l: u32,
    mu1: f64,
    gamma: Option<f64>,
) -> Result<CaccioppoliSeries, ExperimentError> {
    if l < 1 {
        return Err(ExperimentError::InvalidParams("l ≥ 1 required".into()));
    }
    match gamma {
        None if !(alpha >= 0.0) => {
            return Err(ExperimentError::InvalidParams(format!("α ≥ 0 required (got α = {alpha})")));
        }
        Some(g) if !(alpha > -0.5 && (0.0..1.0).contains(&g)) => {
            return Err(ExperimentError::InvalidParams(format!(
                "variant mode needs α > -1/2 and 0 ≤ γ < 1 (got α = {alpha}, γ = {g})"
            )));
        }
        _ => {}
    }
    let cut = interior_cutoff(eta);
    let mut rows = Vec::with_capacity(derivs.len());
    for (d, &delta) in derivs.iter().zip(deltas) {
        check_grid(eta, d)?;
        let area = d.grid.hx() * d.grid.hy();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut extra = 0.0;
        for (k, &(e, ge)) in cut.iter().enumerate() {
            let g1 = d.gamma1[k];
            if e > 0.0 {
                lhs += e.powi(2 * l as i32) * g1.powf(alpha - 0.5 * mu1) * d.d11[k] * d.d11[k];
            }
            let grad2 = ge[0] * ge[0] + ge[1] * ge[1];
            if grad2 > 0.0 {
                let w = grad2 * e.powi(2 * l as i32 - 2);
                rhs += w * g1.powf(alpha + 1.0);
                if let Some(gm) = gamma {
                    extra += w * g1.powf((alpha + 1.0) / (1.0 - gm));
                }
            }
        }
        lhs *= area;
        rhs *= area;
        if gamma.is_some() {
            rhs += 1.0 + extra * area;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(CaccioppoliRow { delta, lhs, rhs, ratio });
    }
    let positive: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| *r > 0.0).collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let spread = if positive.is_empty() {
        1.0
    } else {
        positive.iter().copied().fold(0.0, f64::max) / positive.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(CaccioppoliSeries { alpha, l, gamma, rows, spread, max_ratio })
}

/// Moments at one δ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub delta: f64,
    /// `ln ∫ η^{2l} Γ₁^{χ/2}`, one per χ.
    pub ln_gamma1: Vec<f64>,
    /// Same for `Γ₂`.
    pub ln_gamma2: Vec<f64>,
    /// `∫ η^{2l} Γ₁^{s+1} / (1 + ∫ η^{2l} Γ₁^{s+(2+μ₁)/4})` with `s = χ/2 - 1`.
    pub bootstrap_ratio: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityTable {
    pub chis: Vec<f64>,
    pub l: u32,
    pub rows: Vec<MomentRow>,
    /// Per χ: max over successive δ of `M(δ_{k+1})/M(δ_k)` for `Γ₁`.
    pub trend_gamma1: Vec<f64>,
    pub trend_gamma2: Vec<f64>,
    /// Per χ: largest over smallest bootstrap ratio across δ.
    pub bootstrap_spread: Vec<f64>,
    pub saturated: bool,
}

fn ln_moment(cut: &[(f64, [f64; 2])], gamma: &[f64], l: u32, p: f64, ln_area: f64) -> f64 {
    ln_area
        + log_sum_exp(cut.iter().zip(gamma).map(|(&(e, _), g)| {
            if e > 0.0 {
                2.0 * l as f64 * e.ln() + p * g.ln()
            } else {
                f64::NEG_INFINITY
            }
        }))
}

fn max_successive_ratio(ln_m: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = ln_m.collect();
    if v.len() < 2 {
        return 1.0;
    }
    v.windows(2).map(|w| (w[1] - w[0]).exp()).fold(f64::NEG_INFINITY, f64::max)
}

pub fn integrability_scan(
    derivs: &[NodalDerivatives],
    deltas: &[f64],
    eta: &CutoffField,
    chis: &[f64],
    l: u32,
    mu1: f64,
) -> Result<IntegrabilityTable, ExperimentError> {
    if chis.is_empty() || chis.iter().any(|c| !(*c > 2.0)) {
        return Err(ExperimentError::InvalidParams("every χ must exceed 2".into()));
    }
    let cut = interior_cutoff(eta);
    let mut rows = Vec::with_capacity(derivs.len());
    let mut saturated = false;
    for (d, &delta) in derivs.iter().zip(deltas) {
        check_grid(eta, d)?;
        let ln_area = (d.grid.hx() * d.grid.hy()).ln();
        let ln_gamma1: Vec<f64> = chis.iter().map(|c| ln_moment(&cut, &d.gamma1, l, 0.5 * c, ln_area)).collect();
        let ln_gamma2: Vec<f64> = chis.iter().map(|c| ln_moment(&cut, &d.gamma2, l, 0.5 * c, ln_area)).collect();
        saturated |= ln_gamma1.iter().chain(&ln_gamma2).any(|v| *v > SATURATION_LOG);
        let bootstrap_ratio = chis
            .iter()
            .zip(&ln_gamma1)
            .map(|(c, lhs)| {
                let s = 0.5 * c - 1.0;
                let rhs = ln_moment(&cut, &d.gamma1, l, s + 0.25 * (2.0 + mu1), ln_area);
                // lhs / (1 + rhs) in log form
                (lhs - log_sum_exp([0.0, rhs].into_iter())).exp()
            })
            .collect();
        rows.push(MomentRow { delta, ln_gamma1, ln_gamma2, bootstrap_ratio });
    }
    let per_chi = |f: &dyn Fn(&MomentRow, usize) -> f64| -> Vec<f64> {
        (0..chis.len()).map(|c| max_successive_ratio(rows.iter().map(|r| f(r, c)))).collect()
    };
    let trend_gamma1 = per_chi(&|r, c| r.ln_gamma1[c]);
    let trend_gamma2 = per_chi(&|r, c| r.ln_gamma2[c]);
    let bootstrap_spread = (0..chis.len())
        .map(|c| {
            let v: Vec<f64> = rows.iter().map(|r| r.bootstrap_ratio[c]).collect();
            v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(IntegrabilityTable { chis: chis.to_vec(), l, rows, trend_gamma1, trend_gamma2, bootstrap_spread, saturated })
}

/// Weighted Hessian energies and interior norms at one δ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivativeRow {
    pub delta: f64,
    /// `∫ D²f_δ(∇u)(∇∂_i u, ∇∂_i u) Γ_i^{α_i} η²` for `i = 1, 2`.
    pub weighted: [f64; 2],
    /// `‖∇²u‖_{L²}` over the core of the cutoff.
    pub hessian_l2: f64,
    /// `‖∇u‖_{L∞}` over the core of the cutoff.
    pub gradient_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivativeBounds {
    pub alphas: [f64; 2],
    pub rows: Vec<SecondDerivativeRow>,
    pub max_weighted: [f64; 2],
    pub max_hessian_l2: f64,
    /// Largest over smallest interior gradient bound across δ.
    pub gradient_sup_variation: f64,
}

pub fn second_derivative_bounds(
    path: &RegularizationPath,
    derivs: &[NodalDerivatives],
    eta: &CutoffField,
    alphas: [f64; 2],
) -> Result<SecondDerivativeBounds, ExperimentError> {
    if !(alphas[0] >= 0.0 && alphas[1] >= 0.0) {
        return Err(ExperimentError::InvalidParams("α₁, α₂ ≥ 0 required".into()));
    }
    let cut = interior_cutoff(eta);
    let mut rows = Vec::with_capacity(derivs.len());
    for (k, d) in derivs.iter().enumerate() {
        check_grid(eta, d)?;
        let f = path.density(k);
        let g = d.grid;
        let area = g.hx() * g.hy();
        let mut weighted = [0.0; 2];
        let mut h2 = 0.0;
        let mut sup: f64 = 0.0;
        let mut n = 0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let e = cut[n].0;
                if e > 0.0 {
                    let h = f.hessian([d.d1[n], d.d2[n]]);
                    let q = |v: [f64; 2]| {
                        v[0] * (h[0][0] * v[0] + h[0][1] * v[1]) + v[1] * (h[1][0] * v[0] + h[1][1] * v[1])
                    };
                    weighted[0] += q([d.d11[n], d.d12[n]]) * d.gamma1[n].powf(alphas[0]) * e * e;
                    weighted[1] += q([d.d12[n], d.d22[n]]) * d.gamma2[n].powf(alphas[1]) * e * e;
                }
                if eta.in_core(i, j) {
                    h2 += d.d11[n].powi(2) + 2.0 * d.d12[n].powi(2) + d.d22[n].powi(2);
                    sup = sup.max(d.d1[n].hypot(d.d2[n]));
                }
                n += 1;
            }
        }
        rows.push(SecondDerivativeRow {
            delta: path.schedule[k],
            weighted: [weighted[0] * area, weighted[1] * area],
            hessian_l2: (h2 * area).sqrt(),
            gradient_sup: sup,
        });
    }
    let fold_max = |f: &dyn Fn(&SecondDerivativeRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let sups: Vec<f64> = rows.iter().map(|r| r.gradient_sup).collect();
    let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sups.iter().copied().fold(0.0, f64::max);
    Ok(SecondDerivativeBounds {
        alphas,
        max_weighted: [fold_max(&|r| r.weighted[0]), fold_max(&|r| r.weighted[1])],
        max_hessian_l2: fold_max(&|r| r.hessian_l2),
        gradient_sup_variation: if lo > 0.0 { hi / lo } else { 1.0 },
        rows,
    })
}
