use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::solver::{DiscreteField, Grid};

/// Dirichlet data presets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum BoundaryPreset {
    /// `a + b x + c y`.
    Affine { a: f64, b: f64, c: f64 },
    /// `sin(2πx)·y`.
    Sine,
    /// `√((2x-1)² + ε²)`, a smoothed `|2x-1|`.
    Kink { eps: f64 },
}

impl BoundaryPreset {
    pub const KEYS: [&'static str; 3] = ["affine", "sine", "kink"];

    pub fn key(&self) -> &'static str {
        match self {
            BoundaryPreset::Affine { .. } => "affine",
            BoundaryPreset::Sine => "sine",
            BoundaryPreset::Kink { .. } => "kink",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match *self {
            BoundaryPreset::Affine { a, b, c } => {
                [("a", a), ("b", b), ("c", c)].map(|(k, v)| (k.to_string(), v)).into()
            }
            BoundaryPreset::Sine => BTreeMap::new(),
            BoundaryPreset::Kink { eps } => [("eps".to_string(), eps)].into(),
        }
    }

    /// Parameter names accepted by [`from_key`](Self::from_key).
    pub fn param_names(key: &str) -> &'static [&'static str] {
        match key {
            "affine" => &["a", "b", "c"],
            "kink" => &["eps"],
            _ => &[],
        }
    }

    /// Defaults: affine `1 + x + 2y`, kink `ε = 0.05`.
    pub fn from_key(key: &str, params: &BTreeMap<String, f64>) -> Result<Self, ExperimentError> {
        if let Some(bad) = params.keys().find(|k| !Self::param_names(key).contains(&k.as_str())) {
            return Err(ExperimentError::InvalidParams(format!("preset `{key}` has no parameter `{bad}`")));
        }
        let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
        match key {
            "affine" => Ok(BoundaryPreset::Affine { a: get("a", 1.0), b: get("b", 1.0), c: get("c", 2.0) }),
            "sine" => Ok(BoundaryPreset::Sine),
            "kink" => {
                let eps = get("eps", 0.05);
                if !(eps > 0.0) {
                    return Err(ExperimentError::InvalidParams(format!("kink smoothing ε > 0 required (got {eps})")));
                }
                Ok(BoundaryPreset::Kink { eps })
            }
            other => Err(ExperimentError::InvalidParams(format!("unknown preset `{other}`"))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            BoundaryPreset::Affine { a, b, c } => a + b * x + c * y,
            BoundaryPreset::Sine => (2.0 * PI * x).sin() * y,
            BoundaryPreset::Kink { eps } => ((2.0 * x - 1.0).powi(2) + eps * eps).sqrt(),
        }
    }

    /// Boundary data with the Coons-patch interior as initial iterate.
    pub fn initial_field(&self, grid: Grid) -> DiscreteField {
        DiscreteField::with_boundary(grid, |x, y| self.eval(x, y))
    }
}
