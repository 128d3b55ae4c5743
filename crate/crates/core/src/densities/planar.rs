use serde::{Deserialize, Serialize};

use super::{DensityError, ScalarDensity};

/// A twice differentiable energy density on ℝ².
pub trait Density: Send + Sync {
    fn value(&self, xi: [f64; 2]) -> f64;
    fn gradient(&self, xi: [f64; 2]) -> [f64; 2];
    fn hessian(&self, xi: [f64; 2]) -> [[f64; 2]; 2];
    /// JSON descriptor for report provenance.
    fn descriptor(&self) -> serde_json::Value;
}

/// Eigenvalues `(λ_min, λ_max)` of a symmetric 2×2 matrix.
pub fn sym_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// `f(ξ) = Σ_i f_i(ξ_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingDensity {
    pub components: Vec<ScalarDensity>,
}

impl SplittingDensity {
    pub fn new(components: Vec<ScalarDensity>) -> Result<Self, DensityError> {
        if components.len() < 2 {
            return Err(DensityError::DimensionMismatch { expected: 2, got: components.len() });
        }
        Ok(Self { components })
    }

    pub fn pair(f1: ScalarDensity, f2: ScalarDensity) -> Self {
        Self { components: vec![f1, f2] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn value_n(&self, xi: &[f64]) -> f64 {
        self.components.iter().zip(xi).map(|(f, &t)| f.value(t)).sum()
    }

    pub fn gradient_n(&self, xi: &[f64]) -> Vec<f64> {
        self.components.iter().zip(xi).map(|(f, &t)| f.first_derivative(t)).collect()
    }

    /// Diagonal of the (diagonal) Hessian.
    pub fn hessian_diagonal_n(&self, xi: &[f64]) -> Vec<f64> {
        self.components.iter().zip(xi).map(|(f, &t)| f.second_derivative(t)).collect()
    }
}

impl Density for SplittingDensity {
    fn value(&self, xi: [f64; 2]) -> f64 {
        self.components[0].value(xi[0]) + self.components[1].value(xi[1])
    }

    fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        [self.components[0].first_derivative(xi[0]), self.components[1].first_derivative(xi[1])]
    }

    fn hessian(&self, xi: [f64; 2]) -> [[f64; 2]; 2] {
        [[self.components[0].second_derivative(xi[0]), 0.0], [0.0, self.components[1].second_derivative(xi[1])]]
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({ "structure": "splitting", "components": self.components })
    }
}

/// `f(ξ) = Φ(|ξ|)` for an even profile `Φ` with `Φ'(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialDensity {
    pub profile: ScalarDensity,
}

/// Below this radius `Φ'(r)/r` is replaced by `Φ''(r)`.
const RADIAL_ORIGIN: f64 = 1e-7;

impl RadialDensity {
    pub fn new(profile: ScalarDensity) -> Result<Self, DensityError> {
        let d = profile.first_derivative(0.0);
        if d != 0.0 {
            return Err(DensityError::InvalidParameter { name: "profile'(0)", value: d, constraint: "Φ'(0) = 0" });
        }
        Ok(Self { profile })
    }

    /// Tangential eigenvalue `Φ'(r)/r`, continuous at `r = 0`.
    pub fn tangential(&self, r: f64) -> f64 {
        if r < RADIAL_ORIGIN {
            self.profile.second_derivative(r)
        } else {
            self.profile.first_derivative(r) / r
        }
    }
}

impl Density for RadialDensity {
    fn value(&self, xi: [f64; 2]) -> f64 {
        self.profile.value(xi[0].hypot(xi[1]))
    }

    fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        let r = xi[0].hypot(xi[1]);
        let s = self.tangential(r);
        [s * xi[0], s * xi[1]]
    }

    fn hessian(&self, xi: [f64; 2]) -> [[f64; 2]; 2] {
        let r = xi[0].hypot(xi[1]);
        let tangential = self.tangential(r);
        let radial = self.profile.second_derivative(r);
        if r < RADIAL_ORIGIN {
            return [[radial, 0.0], [0.0, radial]];
        }
        let (n0, n1) = (xi[0] / r, xi[1] / r);
        let d = radial - tangential;
        [[tangential + d * n0 * n0, d * n0 * n1], [d * n0 * n1, tangential + d * n1 * n1]]
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({ "structure": "radial", "profile": self.profile })
    }
}

/// The two density structures handled by the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum BaseDensity {
    Splitting(SplittingDensity),
    Radial(RadialDensity),
}

impl BaseDensity {
    /// Scalar pieces whose recession slopes bound the stress components:
    /// one per axis for splitting densities, the profile for radial ones.
    pub fn scalar_parts(&self) -> Vec<&ScalarDensity> {
        match self {
            BaseDensity::Splitting(s) => s.components.iter().collect(),
            BaseDensity::Radial(r) => vec![&r.profile],
        }
    }
}

impl Density for BaseDensity {
    fn value(&self, xi: [f64; 2]) -> f64 {
        match self {
            BaseDensity::Splitting(s) => s.value(xi),
            BaseDensity::Radial(r) => r.value(xi),
        }
    }

    fn gradient(&self, xi: [f64; 2]) -> [f64; 2] {
        match self {
            BaseDensity::Splitting(s) => s.gradient(xi),
            BaseDensity::Radial(r) => r.gradient(xi),
        }
    }

    fn hessian(&self, xi: [f64; 2]) -> [[f64; 2]; 2] {
        match self {
            BaseDensity::Splitting(s) => s.hessian(xi),
            BaseDensity::Radial(r) => r.hessian(xi),
        }
    }

    fn descriptor(&self) -> serde_json::Value {
        match self {
            BaseDensity::Splitting(s) => s.descriptor(),
            BaseDensity::Radial(r) => r.descriptor(),
        }
    }
}

impl From<SplittingDensity> for BaseDensity {
    fn from(s: SplittingDensity) -> Self {
        BaseDensity::Splitting(s)
    }
}

impl From<RadialDensity> for BaseDensity {
    fn from(r: RadialDensity) -> Self {
        BaseDensity::Radial(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(mu: f64) -> ScalarDensity {
        ScalarDensity::phi_mu(mu).unwrap()
    }

    #[test]
    fn splitting_needs_two_components() {
        assert!(SplittingDensity::new(vec![phi(2.0)]).is_err());
        let s = SplittingDensity::new(vec![phi(2.0), phi(3.0), phi(1.5)]).unwrap();
        assert_eq!(s.dim(), 3);
        let v = s.value_n(&[1.0, 2.0, 3.0]);
        assert!((v - (phi(2.0).value(1.0) + phi(3.0).value(2.0) + phi(1.5).value(3.0))).abs() < 1e-15);
    }

    #[test]
    fn radial_eigenvalues_are_radial_and_tangential() {
        let f = RadialDensity::new(phi(2.0)).unwrap();
        let xi = [3.0, -4.0];
        let (lo, hi) = sym_eigenvalues(f.hessian(xi));
        let radial = phi(2.0).second_derivative(5.0);
        let tangential = phi(2.0).first_derivative(5.0) / 5.0;
        assert!((lo - radial.min(tangential)).abs() < 1e-14);
        assert!((hi - radial.max(tangential)).abs() < 1e-14);
    }

    #[test]
    fn radial_hessian_is_continuous_at_origin() {
        let f = RadialDensity::new(phi(2.0)).unwrap();
        let h0 = f.hessian([0.0, 0.0]);
        let h1 = f.hessian([2e-7, 1e-7]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((h0[i][j] - h1[i][j]).abs() < 1e-5);
            }
        }
        assert_eq!(f.gradient([0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn radial_rejects_kinked_profile() {
        // minimal surface is fine (Φ'(0) = 0)
        assert!(RadialDensity::new(ScalarDensity::minimal_surface(2.0).unwrap()).is_ok());
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        assert_eq!(sym_eigenvalues([[3.0, 0.0], [0.0, 1.0]]), (1.0, 3.0));
    }
}
