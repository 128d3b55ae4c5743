use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Ellipticity and growth exponents of a density; absent entries disable
/// the statements that need them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    /// Upper exponent of the non-splitting ellipticity bound.
    pub kappa: Option<f64>,
    /// Growth exponent of an unbounded `f₁''`.
    pub varkappa: Option<f64>,
    /// Growth exponent of an unbounded `f₂''`.
    pub gamma: Option<f64>,
}

impl ExponentSet {
    /// `μ = max{μ₁, μ₂}` over the supplied entries.
    pub fn mu(&self) -> Option<f64> {
        match (self.mu1, self.mu2) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let check = |name: &'static str, v: Option<f64>, ok: fn(f64) -> bool, constraint: &'static str| match v {
            Some(x) if !(x.is_finite() && ok(x)) => Err(AnalysisError::ExponentDomain { name, value: x, constraint }),
            _ => Ok(()),
        };
        check("mu1", self.mu1, |x| x > 1.0, "μ₁ > 1")?;
        check("mu2", self.mu2, |x| x > 1.0, "μ₂ > 1")?;
        check("kappa", self.kappa, |_| true, "κ finite")?;
        check("varkappa", self.varkappa, |x| x >= 0.0, "ϰ ≥ 0")?;
        check("gamma", self.gamma, |x| x >= 0.0, "γ ≥ 0")?;
        Ok(())
    }
}

/// The regularity statements the calculator decides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    /// `∂₁u ∈ L^χ_loc` for all finite χ: `1 < μ₁ < 2`.
    HigherIntegrability,
    /// `C^{1,α}` regularity and uniqueness up to constants for splitting
    /// densities: `max{μ₁, μ₂} < 2`.
    SplittingRegularity,
    /// Same conclusion without splitting: `μ > 1`, `-1 < κ ≤ 1`, `μ < 2 + κ`.
    BalancedRegularity,
    /// Unbounded `f₁''`: `1 < μ₁`, `0 ≤ ϰ < 2 - μ₁`.
    UnboundedFirst,
    /// Growing `f₂''`: `1 < μ₁ < 2`, `0 ≤ γ < (2-μ₁)/(1+(2-μ₁))`.
    GrowingSecond,
}

impl Statement {
    pub const ALL: [Statement; 5] = [
        Statement::HigherIntegrability,
        Statement::SplittingRegularity,
        Statement::BalancedRegularity,
        Statement::UnboundedFirst,
        Statement::GrowingSecond,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Statement::HigherIntegrability => "higher_integrability",
            Statement::SplittingRegularity => "splitting_regularity",
            Statement::BalancedRegularity => "balanced_regularity",
            Statement::UnboundedFirst => "unbounded_first",
            Statement::GrowingSecond => "growing_second",
        }
    }
}

/// Exponents of the bootstrap inequality for the `χ/2`-moment of `Γ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityBookkeeping {
    pub chi: f64,
    /// `s = χ/2 - 1`.
    pub s: f64,
    /// `ε̂ = 1 - μ₁/2`.
    pub eps_hat: f64,
    /// `α = s - ε̂/2`.
    pub alpha: f64,
    /// Exponent `s + 1` of the left side.
    pub lhs_exponent: f64,
    /// Exponent `s + (2+μ₁)/4` of the right side.
    pub rhs_exponent: f64,
}

pub fn integrability_bookkeeping(chi: f64, mu1: f64) -> Result<IntegrabilityBookkeeping, AnalysisError> {
    if !(chi > 2.0 && chi.is_finite()) {
        return Err(AnalysisError::ExponentDomain { name: "chi", value: chi, constraint: "χ > 2" });
    }
    let s = 0.5 * chi - 1.0;
    let eps_hat = 1.0 - 0.5 * mu1;
    Ok(IntegrabilityBookkeeping {
        chi,
        s,
        eps_hat,
        alpha: s - 0.5 * eps_hat,
        lhs_exponent: s + 1.0,
        rhs_exponent: s + 0.25 * (2.0 + mu1),
    })
}

/// `(s, α)` with `α ≥ 0`, `α < s + κ/2` and `s < α + (2-μ)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancedWitness {
    pub s: f64,
    pub alpha: f64,
}

/// Midpoint of the admissible `α` window for `s = χ/2 - 1`, shifting `s`
/// up if the midpoint is negative. `None` when the window is empty.
pub fn balanced_witness(mu: f64, kappa: f64, chi: f64) -> Option<BalancedWitness> {
    let width = 0.5 * kappa + 0.5 * (2.0 - mu);
    if !(width > 0.0) {
        return None;
    }
    let mut s = 0.5 * chi - 1.0;
    let mut alpha = s + 0.25 * (kappa - (2.0 - mu));
    if alpha < 0.0 {
        s -= alpha;
        alpha = 0.0_f64.max(s + 0.25 * (kappa - (2.0 - mu)));
    }
    Some(BalancedWitness { s, alpha })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    /// `τ_s = 0.9(1 - μ₁/2)`, `τ_α` half the admissible window.
    Recipe,
    /// `τ_s` midway between the smallest admissible value and `1 - μ₁/2`.
    Constructive,
}

/// Exponents `s = -1/2 + τ_s`, `α = -1/2 + τ_α` for the growing-`f₂''` case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauWitness {
    pub tau_s: f64,
    pub tau_alpha: f64,
    pub s: f64,
    pub alpha: f64,
    pub source: WitnessSource,
}

/// The three conditions `0 < τ_α < τ_s`, `γ < 2(τ_s-τ_α)/(1+2τ_s)` and
/// `τ_s - τ_α < 1 - μ₁/2`.
pub fn tau_conditions(mu1: f64, gamma: f64, tau_s: f64, tau_alpha: f64) -> [bool; 3] {
    [
        tau_alpha > 0.0 && tau_alpha < tau_s,
        gamma < 2.0 * (tau_s - tau_alpha) / (1.0 + 2.0 * tau_s),
        tau_s - tau_alpha < 1.0 - 0.5 * mu1,
    ]
}

fn tau_witness(mu1: f64, gamma: f64, tau_s: f64, tau_alpha: f64, source: WitnessSource) -> Option<TauWitness> {
    let w = TauWitness { tau_s, tau_alpha, s: tau_s - 0.5, alpha: tau_alpha - 0.5, source };
    (tau_conditions(mu1, gamma, tau_s, tau_alpha).iter().all(|&b| b) && tau_s < 1.0 - 0.5 * mu1).then_some(w)
}

/// A witness pair `(τ_s, τ_α)`, if `γ` is below the admissibility bound.
pub fn growing_second_witness(mu1: f64, gamma: f64) -> Option<TauWitness> {
    let e = 1.0 - 0.5 * mu1;
    if !(e > 0.0 && (0.0..1.0).contains(&gamma)) {
        return None;
    }
    // upper end of the τ_α window from the second condition
    let window = |tau_s: f64| tau_s - 0.5 * gamma * (1.0 + 2.0 * tau_s);
    let tau_s = 0.9 * e;
    let w = window(tau_s);
    if w > 0.0 {
        if let Some(t) = tau_witness(mu1, gamma, tau_s, (0.5 * tau_s).min(0.5 * w), WitnessSource::Recipe) {
            return Some(t);
        }
    }
    let tau_min = gamma / (2.0 * (1.0 - gamma));
    let tau_s = 0.5 * (tau_min + e);
    tau_witness(mu1, gamma, tau_s, 0.5 * window(tau_s), WitnessSource::Constructive)
}

/// Per-statement verdicts plus the exponent bookkeeping that applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub exponents: ExponentSet,
    pub higher_integrability: Option<bool>,
    pub splitting_regularity: Option<bool>,
    pub balanced_regularity: Option<bool>,
    pub unbounded_first: Option<bool>,
    pub growing_second: Option<bool>,
    /// `(2-μ₁)/(1+(2-μ₁))`.
    pub gamma_bound: Option<f64>,
    pub integrability: Option<IntegrabilityBookkeeping>,
    pub balanced: Option<BalancedWitness>,
    pub tau: Option<TauWitness>,
}

impl Admissibility {
    pub fn verdict(&self, s: Statement) -> Option<bool> {
        match s {
            Statement::HigherIntegrability => self.higher_integrability,
            Statement::SplittingRegularity => self.splitting_regularity,
            Statement::BalancedRegularity => self.balanced_regularity,
            Statement::UnboundedFirst => self.unbounded_first,
            Statement::GrowingSecond => self.growing_second,
        }
    }
}

/// Decides each statement whose exponents are supplied. `chi > 2` selects
/// the moment used for the bookkeeping.
pub fn exponent_admissibility(e: &ExponentSet, chi: f64) -> Result<Admissibility, AnalysisError> {
    e.validate()?;
    let higher_integrability = e.mu1.map(|m| m < 2.0);
    let splitting_regularity = match (e.mu1, e.mu2) {
        (Some(a), Some(b)) => Some(a.max(b) < 2.0),
        _ => None,
    };
    let balanced_regularity = match (e.mu(), e.kappa) {
        (Some(mu), Some(k)) => Some(k > -1.0 && k <= 1.0 && mu < 2.0 + k),
        _ => None,
    };
    let unbounded_first = match (e.mu1, e.varkappa) {
        (Some(m), Some(v)) => Some(v < 2.0 - m),
        _ => None,
    };
    let gamma_bound = e.mu1.map(|m| (2.0 - m) / (1.0 + (2.0 - m)));
    let growing_second = match (e.mu1, e.gamma, gamma_bound) {
        (Some(m), Some(g), Some(b)) => Some(m < 2.0 && g < b),
        _ => None,
    };
    let integrability = match e.mu1 {
        Some(m) if m < 2.0 => Some(integrability_bookkeeping(chi, m)?),
        _ => None,
    };
    let balanced = match (e.mu(), e.kappa, balanced_regularity) {
        (Some(mu), Some(k), Some(true)) => balanced_witness(mu, k, chi),
        _ => None,
    };
    let tau = match (e.mu1, e.gamma, growing_second) {
        (Some(m), Some(g), Some(true)) => growing_second_witness(m, g),
        _ => None,
    };
    Ok(Admissibility {
        exponents: *e,
        higher_integrability,
        splitting_regularity,
        balanced_regularity,
        unbounded_first,
        growing_second,
        gamma_bound,
        integrability,
        balanced,
        tau,
    })
}
