use serde::{Deserialize, Serialize};

use super::{DiscreteField, Grid, SolverError};

/// Centered differences at interior nodes, indexed by
/// [`Grid::interior_idx`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalDerivatives {
    pub grid: Grid,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d11: Vec<f64>,
    /// `∂₂` of the centered `∂₁`.
    pub d12: Vec<f64>,
    pub d22: Vec<f64>,
    /// `Γ₁ = 1 + |∂₁u|²`.
    pub gamma1: Vec<f64>,
    /// `Γ₂ = 1 + |∂₂u|²`.
    pub gamma2: Vec<f64>,
    /// `max |∂₂∂₁u - ∂₁∂₂u|` over interior nodes.
    pub mixed_asymmetry: f64,
}

impl NodalDerivatives {
    /// Interior node coordinates in index order.
    pub fn coordinates(&self) -> Vec<(f64, f64)> {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.interior_count());
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                out.push((g.x(i), g.y(j)));
            }
        }
        out
    }
}

/// Rejects grids too coarse for second differences.
pub fn check_second_difference_grid(g: &Grid) -> Result<(), SolverError> {
    if g.nx < 5 || g.ny < 5 {
        return Err(SolverError::InvalidGrid(format!(
            "second differences need at least 5 nodes per axis, got {}×{}",
            g.nx, g.ny
        )));
    }
    Ok(())
}

pub fn directional_derivatives(u: &DiscreteField) -> Result<NodalDerivatives, SolverError> {
    let g = u.grid;
    check_second_difference_grid(&g)?;
    let (hx, hy) = (g.hx(), g.hy());
    let v = |i: usize, j: usize| u.values[g.idx(i, j)];
    // centered first differences wherever both neighbours exist
    let c1 = |i: usize, j: usize| (v(i + 1, j) - v(i - 1, j)) / (2.0 * hx);
    let c2 = |i: usize, j: usize| (v(i, j + 1) - v(i, j - 1)) / (2.0 * hy);
    let n = g.interior_count();
    let mut out = NodalDerivatives {
        grid: g,
        d1: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        d11: Vec::with_capacity(n),
        d12: Vec::with_capacity(n),
        d22: Vec::with_capacity(n),
        gamma1: Vec::with_capacity(n),
        gamma2: Vec::with_capacity(n),
        mixed_asymmetry: 0.0,
    };
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let d1 = c1(i, j);
            let d2 = c2(i, j);
            let d12 = (c1(i, j + 1) - c1(i, j - 1)) / (2.0 * hy);
            let d21 = (c2(i + 1, j) - c2(i - 1, j)) / (2.0 * hx);
            out.mixed_asymmetry = out.mixed_asymmetry.max((d12 - d21).abs());
            out.d1.push(d1);
            out.d2.push(d2);
            out.d11.push((v(i + 1, j) - 2.0 * v(i, j) + v(i - 1, j)) / (hx * hx));
            out.d22.push((v(i, j + 1) - 2.0 * v(i, j) + v(i, j - 1)) / (hy * hy));
            out.d12.push(d12);
            out.gamma1.push(1.0 + d1 * d1);
            out.gamma2.push(1.0 + d2 * d2);
        }
    }
    Ok(out)
}
