use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::DensityError;
use crate::quadrature;

/// One-dimensional convex density of linear growth, extended evenly to the
/// whole line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarDensity {
    /// `Φ_μ(t) = (μ-1) ∫_0^|t| ∫_0^s (1+r)^{-μ} dr ds`.
    PhiMu { mu: f64 },
    /// Minimal-surface profile `(1 + |t|^k)^{1/k}`.
    MinimalSurface { k: f64 },
    /// `ln(2 cosh(t/2))`, i.e. `ln(1+e^|t|) - |t|/2`: same second derivative
    /// as `ln(1+e^t)` but even and smooth at the origin.
    Softplus,
    /// Borderline profile with `h''(t) = 2 (1+t)^{-1-1/ln(1+t)} / ln(1+t)`
    /// for `t ≥ e-1`, blended to a quadratic polynomial in `t` on `[0, e-1)`.
    IteratedLog,
    /// Sum of Gaussian atoms `h''(t) = Σ_i exp(-(t-i)²/σ_i²)`, `i = 1..=N`.
    Atoms(Atoms),
    /// `t²/2`; superlinear control, not of linear growth.
    Quadratic,
    /// Identically zero; only meaningful as a base for a pure regularizer.
    Zero,
}

/// Truncated atom sequence with the bound on the discarded tail `Σ_{i>N} σ_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atoms {
    pub sigmas: Vec<f64>,
    pub tail_bound: f64,
}

/// Rule generating the atom widths `σ_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomSequence {
    /// `σ_i = ratio^i`.
    Geometric { ratio: f64 },
    /// `σ_i = scale · i^{-exponent}`.
    Power { scale: f64, exponent: f64 },
}

impl AtomSequence {
    pub fn truncate(self, n: usize) -> Result<Atoms, DensityError> {
        if n == 0 {
            return Err(DensityError::InvalidParameter { name: "n", value: 0.0, constraint: "n ≥ 1" });
        }
        match self {
            AtomSequence::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(DensityError::DivergentAtoms(format!("geometric ratio {ratio} outside (0, 1)")));
                }
                let sigmas = (1..=n).map(|i| ratio.powi(i as i32)).collect();
                let tail_bound = ratio.powi(n as i32 + 1) / (1.0 - ratio);
                Ok(Atoms { sigmas, tail_bound })
            }
            AtomSequence::Power { scale, exponent } => {
                if !(scale > 0.0) {
                    return Err(DensityError::InvalidParameter {
                        name: "scale",
                        value: scale,
                        constraint: "scale > 0",
                    });
                }
                if !(exponent > 1.0) {
                    return Err(DensityError::DivergentAtoms(format!("Σ i^-{exponent} diverges")));
                }
                let sigmas = (1..=n).map(|i| scale * (i as f64).powf(-exponent)).collect();
                // Σ_{i>N} i^-p ≤ ∫_N^∞ x^-p dx
                let tail_bound = scale * (n as f64).powf(1.0 - exponent) / (exponent - 1.0);
                Ok(Atoms { sigmas, tail_bound })
            }
        }
    }
}

// Iterated-log profile: blend point e-1 (where ln(1+t) = 1) and the value,
// slope of h'' there.
const IL_T0: f64 = E - 1.0;
const IL_C: f64 = 2.0 / E;
fn il_v0() -> f64 {
    2.0 / (E * E)
}
fn il_s0() -> f64 {
    -4.0 / (E * E * E)
}
fn il_h1_t0() -> f64 {
    il_v0() * IL_T0 - il_s0() * IL_T0 * IL_T0 / 3.0
}
fn il_h_t0() -> f64 {
    il_v0() * IL_T0 * IL_T0 / 2.0 - 5.0 * il_s0() * IL_T0.powi(3) / 24.0
}

/// `x erf x + e^{-x²}/√π`, an antiderivative of `erf`.
fn erf_antiderivative(x: f64) -> f64 {
    x * libm::erf(x) + (-x * x).exp() / PI.sqrt()
}

impl ScalarDensity {
    pub fn phi_mu(mu: f64) -> Result<Self, DensityError> {
        if !(mu > 1.0) || !mu.is_finite() {
            return Err(DensityError::InvalidParameter { name: "mu", value: mu, constraint: "μ > 1" });
        }
        Ok(ScalarDensity::PhiMu { mu })
    }

    pub fn minimal_surface(k: f64) -> Result<Self, DensityError> {
        if !(k > 1.0) || !k.is_finite() {
            return Err(DensityError::InvalidParameter { name: "k", value: k, constraint: "k > 1" });
        }
        Ok(ScalarDensity::MinimalSurface { k })
    }

    pub fn atoms(sequence: AtomSequence, n: usize) -> Result<Self, DensityError> {
        Ok(ScalarDensity::Atoms(sequence.truncate(n)?))
    }

    /// Catalog key used in configuration files.
    pub fn key(&self) -> &'static str {
        match self {
            ScalarDensity::PhiMu { .. } => "phi_mu",
            ScalarDensity::MinimalSurface { .. } => "minimal_surface",
            ScalarDensity::Softplus => "softplus",
            ScalarDensity::IteratedLog => "iterated_log",
            ScalarDensity::Atoms(_) => "atoms",
            ScalarDensity::Quadratic => "quadratic",
            ScalarDensity::Zero => "zero",
        }
    }

    /// Keys of every catalog entry.
    pub const CATALOG: [&'static str; 7] =
        ["phi_mu", "minimal_surface", "softplus", "iterated_log", "atoms", "quadratic", "zero"];

    /// Parameter names accepted by a catalog key.
    pub fn catalog_params(key: &str) -> Option<&'static [&'static str]> {
        Some(match key {
            "phi_mu" => &["mu"],
            "minimal_surface" => &["k"],
            "softplus" | "iterated_log" | "quadratic" | "zero" => &[],
            "atoms" => &["ratio", "n", "scale", "exponent"],
            _ => return None,
        })
    }

    /// Builds a catalog entry from its key and a parameter map.
    pub fn from_catalog(key: &str, params: &BTreeMap<String, f64>) -> Result<Self, DensityError> {
        let allowed = Self::catalog_params(key).ok_or_else(|| DensityError::UnknownDensity(key.to_string()))?;
        if let Some(name) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(DensityError::UnknownParameter { density: key.to_string(), name: name.clone() });
        }
        let get = |name: &'static str| {
            params.get(name).copied().ok_or(DensityError::MissingParameter { density: key.to_string(), name })
        };
        match key {
            "phi_mu" => Self::phi_mu(get("mu")?),
            "minimal_surface" => Self::minimal_surface(params.get("k").copied().unwrap_or(2.0)),
            "softplus" => Ok(ScalarDensity::Softplus),
            "iterated_log" => Ok(ScalarDensity::IteratedLog),
            "quadratic" => Ok(ScalarDensity::Quadratic),
            "zero" => Ok(ScalarDensity::Zero),
            "atoms" => {
                let n = params.get("n").copied().unwrap_or(20.0);
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(DensityError::InvalidParameter {
                        name: "n",
                        value: n,
                        constraint: "n a positive integer",
                    });
                }
                let sequence = match (params.get("exponent"), params.get("ratio")) {
                    (Some(&exponent), None) => {
                        AtomSequence::Power { scale: params.get("scale").copied().unwrap_or(0.5), exponent }
                    }
                    (None, ratio) => AtomSequence::Geometric { ratio: ratio.copied().unwrap_or(0.5) },
                    (Some(_), Some(_)) => {
                        return Err(DensityError::InvalidParameter {
                            name: "ratio",
                            value: params["ratio"],
                            constraint: "either ratio or exponent, not both",
                        })
                    }
                };
                Self::atoms(sequence, n as usize)
            }
            _ => Err(DensityError::UnknownDensity(key.to_string())),
        }
    }

    /// Named real parameters, for reports.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self {
            ScalarDensity::PhiMu { mu } => {
                m.insert("mu".into(), *mu);
            }
            ScalarDensity::MinimalSurface { k } => {
                m.insert("k".into(), *k);
            }
            ScalarDensity::Atoms(a) => {
                m.insert("n".into(), a.sigmas.len() as f64);
                m.insert("tail_bound".into(), a.tail_bound);
            }
            _ => {}
        }
        m
    }

    /// Whether `value` is evaluated in closed form (otherwise by quadrature).
    pub fn has_closed_form_value(&self) -> bool {
        !matches!(self, ScalarDensity::IteratedLog)
    }

    /// Whether the density is expected to have linear growth.
    pub fn is_linear_growth(&self) -> bool {
        !matches!(self, ScalarDensity::Quadratic | ScalarDensity::Zero)
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            ScalarDensity::PhiMu { mu } => {
                let l = a.ln_1p();
                let e = 2.0 - mu;
                let tail = if e.abs() < 1e-12 { l } else { (e * l).exp_m1() / e };
                a - tail
            }
            ScalarDensity::MinimalSurface { k } => (1.0 + a.powf(*k)).powf(1.0 / k),
            ScalarDensity::Softplus => {
                let x = 0.5 * a;
                x + (-2.0 * x).exp().ln_1p()
            }
            ScalarDensity::IteratedLog => {
                let (v0, s0) = (il_v0(), il_s0());
                if a < IL_T0 {
                    v0 * a * a / 2.0 + s0 / (2.0 * IL_T0) * (a.powi(4) / 12.0 - IL_T0 * IL_T0 * a * a / 2.0)
                } else {
                    let z_end = a.ln_1p();
                    let panels = (((z_end - 1.0) / 0.25).ceil() as usize).max(1);
                    let tail = quadrature::integrate(|z| z.ln() * z.exp(), 1.0, z_end, panels);
                    il_h_t0() + il_h1_t0() * (a - IL_T0) + IL_C * tail
                }
            }
            ScalarDensity::Atoms(atoms) => {
                let mut s = 0.0;
                for (i, &sigma) in atoms.sigmas.iter().enumerate() {
                    let c = (i + 1) as f64;
                    let x = (a - c) / sigma;
                    let x0 = -c / sigma;
                    s += sigma
                        * (PI.sqrt() / 2.0)
                        * (sigma * (erf_antiderivative(x) - erf_antiderivative(x0)) + a * libm::erf(c / sigma));
                }
                s
            }
            ScalarDensity::Quadratic => 0.5 * t * t,
            ScalarDensity::Zero => 0.0,
        }
    }

    pub fn first_derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let d = match self {
            ScalarDensity::PhiMu { mu } => -((1.0 - mu) * a.ln_1p()).exp_m1(),
            ScalarDensity::MinimalSurface { k } => a.powf(k - 1.0) * (1.0 + a.powf(*k)).powf(1.0 / k - 1.0),
            ScalarDensity::Softplus => 0.5 * (0.5 * a).tanh(),
            ScalarDensity::IteratedLog => {
                let (v0, s0) = (il_v0(), il_s0());
                if a < IL_T0 {
                    v0 * a + s0 / (2.0 * IL_T0) * (a.powi(3) / 3.0 - IL_T0 * IL_T0 * a)
                } else {
                    il_h1_t0() + IL_C * a.ln_1p().ln()
                }
            }
            ScalarDensity::Atoms(atoms) => atoms
                .sigmas
                .iter()
                .enumerate()
                .map(|(i, &sigma)| {
                    let c = (i + 1) as f64;
                    sigma * (PI.sqrt() / 2.0) * (libm::erf((a - c) / sigma) + libm::erf(c / sigma))
                })
                .sum(),
            ScalarDensity::Quadratic => a,
            ScalarDensity::Zero => 0.0,
        };
        sign * d
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            ScalarDensity::PhiMu { mu } => (mu - 1.0) * (-mu * a.ln_1p()).exp(),
            ScalarDensity::MinimalSurface { k } => (k - 1.0) * a.powf(k - 2.0) * (1.0 + a.powf(*k)).powf(1.0 / k - 2.0),
            ScalarDensity::Softplus => {
                let c = (0.5 * a).cosh();
                0.25 / (c * c)
            }
            ScalarDensity::IteratedLog => {
                if a < IL_T0 {
                    il_v0() + il_s0() * (a * a - IL_T0 * IL_T0) / (2.0 * IL_T0)
                } else {
                    let l = a.ln_1p();
                    IL_C / ((1.0 + a) * l)
                }
            }
            ScalarDensity::Atoms(atoms) => atoms
                .sigmas
                .iter()
                .enumerate()
                .map(|(i, &sigma)| {
                    let x = (a - (i + 1) as f64) / sigma;
                    (-x * x).exp()
                })
                .sum(),
            ScalarDensity::Quadratic => 1.0,
            ScalarDensity::Zero => 0.0,
        }
    }

    /// `ln f''(t)`, finite wherever `f''(t) > 0` in exact arithmetic even when
    /// `f''(t)` itself underflows.
    pub fn ln_second_derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            ScalarDensity::PhiMu { mu } => (mu - 1.0).ln() - mu * a.ln_1p(),
            ScalarDensity::MinimalSurface { k } => {
                // k = 2 would give 0·ln 0 at the origin
                let power = if *k == 2.0 { 0.0 } else { (k - 2.0) * a.ln() };
                (k - 1.0).ln() + power + (1.0 / k - 2.0) * a.powf(*k).ln_1p()
            }
            ScalarDensity::Softplus => {
                // ln cosh x = x + ln(1 + e^{-2x}) - ln 2
                let x = 0.5 * a;
                let ln_cosh = x + (-2.0 * x).exp().ln_1p() - 2f64.ln();
                -(4f64.ln()) - 2.0 * ln_cosh
            }
            ScalarDensity::Atoms(atoms) => {
                let exps: Vec<f64> = atoms
                    .sigmas
                    .iter()
                    .enumerate()
                    .map(|(i, &sigma)| {
                        let x = (a - (i + 1) as f64) / sigma;
                        -x * x
                    })
                    .collect();
                let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + exps.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
            }
            _ => self.second_derivative(t).ln(),
        }
    }
}
