use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::densities::{growth_constants, sym_eigenvalues, Density, GrowthConstants, ScalarDensity};

/// Exponents above this are treated as "no power law certifies the bound".
pub const MAX_CERTIFIABLE_EXPONENT: f64 = 16.0;
/// Angular resolution of the annulus grid used for planar densities.
pub const ANGLES: usize = 64;

/// Fitted two-sided power-law bounds
/// `c₁(1+|t|)^{-μ} ≤ f''(t) ≤ c₂(1+|t|)^{-κ}` on a sample range.
///
/// The bounds are certified at the samples only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub mu_fit: f64,
    pub kappa_fit: f64,
    /// `ln c₁`; kept separately because `c₁` underflows for fast decay.
    pub ln_c1: f64,
    pub c1: f64,
    pub c2: f64,
    pub sample_range: (f64, f64),
    pub samples: usize,
    /// `false` when the tail decays faster than any power up to
    /// [`MAX_CERTIFIABLE_EXPONENT`].
    pub lower_bound_certified: bool,
    /// `κ_fit ≥ 0`, i.e. the second derivative is bounded by `c₂`.
    pub bounded_above: bool,
    pub notes: Vec<String>,
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// `n` points with `1 + t` log-spaced on `[1 + lo, 1 + hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((1.0 + lo).ln(), (1.0 + hi).ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp() - 1.0).collect()
}

/// Fits both exponents from `ln λ_lower(x)` and `ln λ_upper(x)` sampled at
/// `x = ln(1+t)`. The exponent is the tail slope over the last decade; the
/// constants are then certified over every sample.
fn fit_log_samples(x: &[f64], ln_lower: &[f64], ln_upper: &[f64], sample_range: (f64, f64)) -> EllipticityReport {
    let x_max = x[x.len() - 1];
    let tail: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= x_max - 10f64.ln()).collect();
    let tx: Vec<f64> = tail.iter().map(|&i| x[i]).collect();
    let lower_tail: Vec<f64> = tail.iter().map(|&i| ln_lower[i]).collect();
    let upper_tail: Vec<f64> = tail.iter().map(|&i| ln_upper[i]).collect();
    let mut notes = Vec::new();

    let mu_tail = -ls_slope(&tx, &lower_tail);
    let lower_bound_certified = mu_tail <= MAX_CERTIFIABLE_EXPONENT;
    if !lower_bound_certified {
        notes.push(format!(
            "lower power-law bound fails for every μ ≤ {MAX_CERTIFIABLE_EXPONENT} on [{}, {}] (tail slope {mu_tail:.3e})",
            sample_range.0, sample_range.1
        ));
    }
    let mu_fit = mu_tail;
    let ln_c1 = x.iter().zip(ln_lower).map(|(x, y)| y + mu_fit * x).fold(f64::INFINITY, f64::min);

    let mut kappa_fit = -ls_slope(&tx, &upper_tail);
    if kappa_fit > mu_fit {
        kappa_fit = mu_fit;
    }
    let kappa_fit = kappa_fit.min(MAX_CERTIFIABLE_EXPONENT);
    let ln_c2 = x.iter().zip(ln_upper).map(|(x, y)| y + kappa_fit * x).fold(f64::NEG_INFINITY, f64::max);

    EllipticityReport {
        mu_fit,
        kappa_fit,
        ln_c1,
        c1: ln_c1.exp(),
        c2: ln_c2.exp(),
        sample_range,
        samples: x.len(),
        lower_bound_certified,
        bounded_above: kappa_fit >= 0.0,
        notes,
    }
}

fn check_scalar_inputs(range: (f64, f64), samples: usize) -> Result<(), AnalysisError> {
    if samples < 100 {
        return Err(AnalysisError::InvalidInput(format!("need at least 100 samples, got {samples}")));
    }
    if !(range.0 <= 0.0 && range.1 >= 100.0 && range.0 >= 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "sample range [{}, {}] must start at 0 and contain [0, 100]",
            range.0, range.1
        )));
    }
    Ok(())
}

/// Fits `c₁(1+|t|)^{-μ} ≤ f''(t) ≤ c₂(1+|t|)^{-κ}` on `range` (for `t ≥ 0`;
/// densities are even).
pub fn fit_scalar_ellipticity(
    f: &ScalarDensity,
    range: (f64, f64),
    samples: usize,
) -> Result<EllipticityReport, AnalysisError> {
    check_scalar_inputs(range, samples)?;
    let ts = log_spaced(range.0, range.1, samples);
    let mut x = Vec::with_capacity(samples);
    let mut y = Vec::with_capacity(samples);
    for &t in &ts {
        let ln2 = f.ln_second_derivative(t);
        if !ln2.is_finite() {
            return Err(AnalysisError::NonConvex { at: [t, 0.0], value: f.second_derivative(t) });
        }
        x.push(t.ln_1p());
        y.push(ln2);
    }
    Ok(fit_log_samples(&x, &y, &y, range))
}

/// Fits the planar bounds
/// `c₁(1+|ξ|)^{-μ}|η|² ≤ D²f(ξ)(η,η) ≤ c₂(1+|ξ|)^{-κ}|η|²` from extreme
/// Hessian eigenvalues on `|ξ| ≤ radius`.
pub fn fit_full_ellipticity<D: Density + ?Sized>(
    f: &D,
    radius: f64,
    samples: usize,
) -> Result<EllipticityReport, AnalysisError> {
    if samples < 20 || !(radius >= 10.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "need radius ≥ 10 and ≥ 20 radial samples (got R = {radius}, {samples})"
        )));
    }
    let radii = log_spaced(0.0, radius, samples);
    let mut x = Vec::with_capacity(samples);
    let mut lower = Vec::with_capacity(samples);
    let mut upper = Vec::with_capacity(samples);
    for &r in &radii {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..ANGLES {
            let theta = 2.0 * std::f64::consts::PI * a as f64 / ANGLES as f64;
            // exact axes avoid cos(π/2) ≈ 6e-17 noise
            let (c, s) = match a * 4 / ANGLES {
                _ if a * 4 % ANGLES == 0 => [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][a * 4 / ANGLES],
                _ => (theta.cos(), theta.sin()),
            };
            let xi = [r * c, r * s];
            let (l, h) = sym_eigenvalues(f.hessian(xi));
            if !(l > 0.0) {
                return Err(AnalysisError::NonConvex { at: xi, value: l });
            }
            lo = lo.min(l);
            hi = hi.max(h);
        }
        x.push(r.ln_1p());
        lower.push(lo.ln());
        upper.push(hi.ln());
    }
    Ok(fit_log_samples(&x, &lower, &upper, (0.0, radius)))
}

/// Growth constants and ellipticity fit of a scalar density; linear growth
/// is checked first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub density: ScalarDensity,
    pub growth: GrowthConstants,
    pub ellipticity: EllipticityReport,
    pub closed_form_value: bool,
}

pub fn check_density(f: &ScalarDensity, range: (f64, f64), samples: usize) -> Result<DensityCheck, AnalysisError> {
    let growth = growth_constants(f, range)?;
    let ellipticity = fit_scalar_ellipticity(f, range, samples)?;
    Ok(DensityCheck { density: f.clone(), growth, ellipticity, closed_form_value: f.has_closed_form_value() })
}
