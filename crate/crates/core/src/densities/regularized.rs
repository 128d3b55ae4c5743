use serde::{Deserialize, Serialize};

use super::{BaseDensity, Density, DensityError};

/// Regularizing term added to a linear-growth density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Regularization {
    /// `(δ/2)|ξ|²`.
    Quadratic,
    /// `(δ/q)|ξ|^q`.
    Power { q: f64 },
    /// `(δ/q)|ξ₁|^q + (δ/2)|ξ|²`.
    MixedPower { q: f64 },
    /// `(δ/2)ξ₁² + (δ/(γ+2))|ξ₂|^{γ+2}`.
    SplitPower { gamma: f64 },
}

impl Regularization {
    /// `q = 2 - κ` for the non-splitting upper exponent `κ ∈ (-1, 0)`.
    pub fn for_kappa(kappa: f64) -> Result<Self, DensityError> {
        if !(kappa > -1.0 && kappa <= 1.0) {
            return Err(DensityError::InvalidParameter { name: "kappa", value: kappa, constraint: "-1 < κ ≤ 1" });
        }
        let r = Regularization::Power { q: 2.0 - kappa };
        r.validate()?;
        Ok(r)
    }

    /// `q = 2 + ϰ` for an unbounded `f₁''` growing like `(1+|t|)^ϰ`.
    pub fn for_varkappa(varkappa: f64) -> Result<Self, DensityError> {
        if !(varkappa >= 0.0) {
            return Err(DensityError::InvalidParameter { name: "varkappa", value: varkappa, constraint: "ϰ ≥ 0" });
        }
        Ok(Regularization::MixedPower { q: 2.0 + varkappa })
    }

    /// Power `γ + 2` in the second direction for `f₂''` growing like `(1+|t|)^γ`.
    pub fn for_gamma(gamma: f64) -> Result<Self, DensityError> {
        let r = Regularization::SplitPower { gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DensityError> {
        match *self {
            Regularization::Quadratic => Ok(()),
            Regularization::Power { q } | Regularization::MixedPower { q } => {
                if q > 1.0 && q.is_finite() {
                    Ok(())
                } else {
                    Err(DensityError::InvalidParameter { name: "q", value: q, constraint: "q > 1" })
                }
            }
            Regularization::SplitPower { gamma } => {
                if gamma >= 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(DensityError::InvalidParameter { name: "gamma", value: gamma, constraint: "γ ≥ 0" })
                }
            }
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Regularization::Quadratic => "quadratic",
            Regularization::Power { .. } => "power",
            Regularization::MixedPower { .. } => "mixed",
            Regularization::SplitPower { .. } => "split_power",
        }
    }

    pub fn value(&self, delta: f64, xi: [f64; 2]) -> f64 {
        let sq = xi[0] * xi[0] + xi[1] * xi[1];
        match *self {
            Regularization::Quadratic => 0.5 * delta * sq,
            Regularization::Power { q } => delta / q * sq.sqrt().powf(q),
            Regularization::MixedPower { q } => delta / q * xi[0].abs().powf(q) + 0.5 * delta * sq,
            Regularization::SplitPower { gamma } => {
                0.5 * delta * xi[0] * xi[0] + delta / (gamma + 2.0) * xi[1].abs().powf(gamma + 2.0)
            }
        }
    }

    pub fn gradient(&self, delta: f64, xi: [f64; 2]) -> [f64; 2] {
        match *self {
            Regularization::Quadratic => [delta * xi[0], delta * xi[1]],
            Regularization::Power { q } => {
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    return [0.0, 0.0];
                }
                let s = delta * r.powf(q - 2.0);
                [s * xi[0], s * xi[1]]
            }
            Regularization::MixedPower { q } => {
                [delta * xi[0].abs().powf(q - 1.0) * xi[0].signum() + delta * xi[0], delta * xi[1]]
            }
            Regularization::SplitPower { gamma } => {
                [delta * xi[0], delta * xi[1].abs().powf(gamma + 1.0) * xi[1].signum()]
            }
        }
    }

    pub fn hessian(&self, delta: f64, xi: [f64; 2]) -> [[f64; 2]; 2] {
        match *self {
            Regularization::Quadratic => [[delta, 0.0], [0.0, delta]],
            Regularization::Power { q } => {
                let r = xi[0].hypot(xi[1]).max(f64::MIN_POSITIVE.sqrt());
                let s = delta * r.powf(q - 2.0);
                let (n0, n1) = (xi[0] / r, xi[1] / r);
                let c = q - 2.0;
                [[s * (1.0 + c * n0 * n0), s * c * n0 * n1], [s * c * n0 * n1, s * (1.0 + c * n1 * n1)]]
            }
            Regularization::MixedPower { q } => {
                [[delta * (q - 1.0) * xi[0].abs().powf(q - 2.0) + delta, 0.0], [0.0, delta]]
            }
            Regularization::SplitPower { gamma } => {
                [[delta, 0.0], [0.0, delta * (gamma + 1.0) * xi[1].abs().powf(gamma)]]
            }
        }
    }
}

/// `f_δ = f + regularizer(δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedDensity {
    pub base: BaseDensity,
    pub delta: f64,
    pub scheme: Regularization,
}

impl RegularizedDensity {
    pub fn new(base: impl Into<BaseDensity>, delta: f64, scheme: Regularization) -> Result<Self, DensityError> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(DensityError::InvalidDelta(delta));
        }
        scheme.validate()?;
        Ok(Self { base: base.into(), delta, scheme })
    }

    /// Same base and scheme at a different `δ`.
    pub fn with_delta(&self, delta: f64) -> Result<Self, DensityError> {
        Self::new(self.base.clone(), delta, self.scheme)
    }
}

/// Shorthand for [`RegularizedDensity::new`].
pub fn regularize(
    base: impl Into<BaseDensity>,
    delta: f64,
    scheme: Regularization,
) -> Result<RegularizedDensity, DensityError> {
    RegularizedDensity::new(base, delta, scheme)
}

impl Density for RegularizedDensity {
    fn value(&self, xi: [f64; 2]) -> f64 {
        self.base.value(xi) + self.scheme.value(self.delta, xi)
    }

    fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        let b = self.base.gradient(xi);
        let r = self.scheme.gradient(self.delta, xi);
        [b[0] + r[0], b[1] + r[1]]
    }

    fn hessian(&self, xi: [f64; 2]) -> [[f64; 2]; 2] {
        let b = self.base.hessian(xi);
        let r = self.scheme.hessian(self.delta, xi);
        [[b[0][0] + r[0][0], b[0][1] + r[0][1]], [b[1][0] + r[1][0], b[1][1] + r[1][1]]]
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "base": self.base.descriptor(),
            "delta": self.delta,
            "regularization": self.scheme,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{ScalarDensity, SplittingDensity};

    fn phi_pair(m1: f64, m2: f64) -> SplittingDensity {
        SplittingDensity::pair(ScalarDensity::phi_mu(m1).unwrap(), ScalarDensity::phi_mu(m2).unwrap())
    }

    #[test]
    fn quadratic_hessian_at_origin() {
        let base = phi_pair(2.0, 3.0);
        let f = regularize(base.clone(), 1.0, Regularization::Quadratic).unwrap();
        let h = f.hessian([0.0, 0.0]);
        let hb = base.hessian([0.0, 0.0]);
        assert_eq!(h, [[1.0 + hb[0][0], 0.0], [0.0, 1.0 + hb[1][1]]]);
    }

    #[test]
    fn q_from_kappa() {
        assert_eq!(Regularization::for_kappa(-0.5).unwrap(), Regularization::Power { q: 2.5 });
        assert_eq!(Regularization::for_varkappa(0.3).unwrap(), Regularization::MixedPower { q: 2.3 });
        assert!(Regularization::for_kappa(-1.0).is_err());
    }

    #[test]
    fn rejects_bad_delta_and_q() {
        let base = phi_pair(2.0, 2.0);
        assert!(regularize(base.clone(), 0.0, Regularization::Quadratic).is_err());
        assert!(regularize(base.clone(), 1.5, Regularization::Quadratic).is_err());
        assert!(regularize(base.clone(), 1.0, Regularization::Quadratic).is_ok());
        assert!(regularize(base.clone(), 0.5, Regularization::Power { q: 1.0 }).is_err());
        assert!(regularize(base, 0.5, Regularization::SplitPower { gamma: -0.1 }).is_err());
    }

    #[test]
    fn split_power_second_direction_has_gamma_term() {
        let base = phi_pair(1.5, 2.0);
        let (gamma, delta) = (0.2, 1e-2);
        let f = regularize(base.clone(), delta, Regularization::for_gamma(gamma).unwrap()).unwrap();
        let t: f64 = 1.7;
        let h = f.hessian([0.3, t])[1][1] - base.hessian([0.3, t])[1][1];
        assert!((h - delta * (gamma + 1.0) * t.powf(gamma)).abs() < 1e-15);
        // finite differences of the gradient
        let e = 1e-6;
        let fd = (f.gradient([0.3, t + e])[1] - f.gradient([0.3, t - e])[1]) / (2.0 * e);
        assert!((fd - f.hessian([0.3, t])[1][1]).abs() < 1e-7);
    }

    #[test]
    fn regularized_value_dominates_base() {
        let base = phi_pair(1.5, 3.0);
        for scheme in [
            Regularization::Quadratic,
            Regularization::Power { q: 2.5 },
            Regularization::MixedPower { q: 2.3 },
            Regularization::SplitPower { gamma: 0.2 },
        ] {
            let f = regularize(base.clone(), 0.1, scheme).unwrap();
            for xi in [[0.0, 0.0], [1.0, -2.0], [-30.0, 4.0]] {
                assert!(f.value(xi) >= base.value(xi));
            }
        }
    }
}
