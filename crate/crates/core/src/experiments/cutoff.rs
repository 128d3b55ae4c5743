use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::solver::Grid;

/// `η = (ρ(x)ρ(y))²` where `ρ` is 1 on the central half of each side,
/// vanishes within `margin` of the boundary and ramps by a cubic smoothstep
/// in between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffField {
    pub grid: Grid,
    pub margin: f64,
    /// `[x0, x1, y0, y1]` where `η = 1`.
    pub core: [f64; 4],
    pub values: Vec<f64>,
    /// Analytic `∇η` at the nodes.
    pub gradient: Vec<[f64; 2]>,
    /// `max |∇η|` over the nodes.
    pub max_gradient: f64,
}

/// `(ρ, ρ')` on `[lo, hi]`.
fn ramp(t: f64, lo: f64, hi: f64, margin: f64) -> (f64, f64) {
    let quarter = 0.25 * (hi - lo);
    let width = quarter - margin;
    let d = (t - lo).min(hi - t);
    let sign = if t - lo <= hi - t { 1.0 } else { -1.0 };
    if d <= margin {
        (0.0, 0.0)
    } else if d >= quarter {
        (1.0, 0.0)
    } else {
        let s = (d - margin) / width;
        (s * s * (3.0 - 2.0 * s), sign * 6.0 * s * (1.0 - s) / width)
    }
}

impl CutoffField {
    /// Rejects margins for which the analytic gradient bound `3/(L/4 - m)`
    /// of `ρ` exceeds `2/m`, i.e. `m > L/10` on the shorter side.
    pub fn new(grid: Grid, margin: f64) -> Result<Self, ExperimentError> {
        let short = (grid.x_max - grid.x_min).min(grid.y_max - grid.y_min);
        if !(margin > 0.0 && margin <= 0.1 * short) {
            return Err(ExperimentError::InvalidParams(format!(
                "cutoff margin must lie in (0, {}] (got {margin})",
                0.1 * short
            )));
        }
        let (lx, ly) = (grid.x_max - grid.x_min, grid.y_max - grid.y_min);
        let core = [grid.x_min + 0.25 * lx, grid.x_max - 0.25 * lx, grid.y_min + 0.25 * ly, grid.y_max - 0.25 * ly];
        let mut values = Vec::with_capacity(grid.len());
        let mut gradient = Vec::with_capacity(grid.len());
        let mut max_gradient: f64 = 0.0;
        for j in 0..grid.ny {
            let (ry, dry) = ramp(grid.y(j), grid.y_min, grid.y_max, margin);
            for i in 0..grid.nx {
                let (rx, drx) = ramp(grid.x(i), grid.x_min, grid.x_max, margin);
                let p = rx * ry;
                let g = [2.0 * p * drx * ry, 2.0 * p * rx * dry];
                max_gradient = max_gradient.max(g[0].hypot(g[1]));
                values.push(p * p);
                gradient.push(g);
            }
        }
        Ok(Self { grid, margin, core, values, gradient, max_gradient })
    }

    /// Whether node `(i, j)` lies in the core rectangle.
    pub fn in_core(&self, i: usize, j: usize) -> bool {
        let (x, y) = (self.grid.x(i), self.grid.y(j));
        x >= self.core[0] && x <= self.core[1] && y >= self.core[2] && y <= self.core[3]
    }
}
