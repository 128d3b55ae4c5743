//! Discrete energy, its gradient and Hessian.
//!
//! Each cell contributes `(h_x h_y / 4) Σ_c f_δ(g_c)` over its four corners.
//! The corner gradient `g_c` pairs the `x`-difference along the cell edge
//! through `c` with the `y`-difference along the other edge through `c`.
//! For splitting densities this is the five-point scheme.

use rayon::prelude::*;

use super::linalg::BandMatrix;
use super::{DiscreteField, Grid, SolverError};
use crate::densities::Density;

/// Local node order in a cell: `(i,j)`, `(i+1,j)`, `(i,j+1)`, `(i+1,j+1)`.
/// Per corner: the (minus, plus) nodes of the `x`- and `y`-difference.
const CORNERS: [([usize; 2], [usize; 2]); 4] = [([0, 1], [0, 2]), ([0, 1], [1, 3]), ([2, 3], [0, 2]), ([2, 3], [1, 3])];

fn cell_nodes(g: &Grid, cell: usize) -> [usize; 4] {
    let (i, j) = (cell % (g.nx - 1), cell / (g.nx - 1));
    [g.idx(i, j), g.idx(i + 1, j), g.idx(i, j + 1), g.idx(i + 1, j + 1)]
}

fn corner_gradients(g: &Grid, u: &[f64], nodes: &[usize; 4]) -> [[f64; 2]; 4] {
    let v = [u[nodes[0]], u[nodes[1]], u[nodes[2]], u[nodes[3]]];
    let (hx, hy) = (g.hx(), g.hy());
    CORNERS.map(|(xp, yp)| [(v[xp[1]] - v[xp[0]]) / hx, (v[yp[1]] - v[yp[0]]) / hy])
}

/// The four corner gradients of every cell, cell-major
/// (`cell = j·(n_x-1) + i`).
pub fn cell_gradients(u: &DiscreteField) -> Vec<[[f64; 2]; 4]> {
    let g = u.grid;
    (0..g.cells()).map(|c| corner_gradients(&g, &u.values, &cell_nodes(&g, c))).collect()
}

fn non_finite(g: &Grid, cell: usize) -> SolverError {
    SolverError::NonFinite { cell: [cell % (g.nx - 1), cell / (g.nx - 1)] }
}

/// `J_δ[u]` by corner quadrature.
pub fn discrete_energy<D: Density + ?Sized>(f: &D, u: &DiscreteField) -> Result<f64, SolverError> {
    energy_of(f, &u.grid, &u.values)
}

pub(crate) fn energy_of<D: Density + ?Sized>(f: &D, g: &Grid, u: &[f64]) -> Result<f64, SolverError> {
    let w = 0.25 * g.hx() * g.hy();
    let per_cell: Vec<f64> = (0..g.cells())
        .into_par_iter()
        .map(|c| {
            let gr = corner_gradients(g, u, &cell_nodes(g, c));
            gr.iter().map(|xi| f.value(*xi)).sum::<f64>() * w
        })
        .collect();
    let mut total = 0.0;
    for (c, e) in per_cell.iter().enumerate() {
        if !e.is_finite() {
            return Err(non_finite(g, c));
        }
        total += e;
    }
    Ok(total)
}

struct CellTerms {
    energy: f64,
    grad: [f64; 4],
    hess: [[f64; 4]; 4],
}

#[allow(clippy::needless_range_loop)]
fn cell_terms<D: Density + ?Sized>(f: &D, g: &Grid, u: &[f64], c: usize, with_hessian: bool) -> CellTerms {
    let nodes = cell_nodes(g, c);
    let gr = corner_gradients(g, u, &nodes);
    let w = 0.25 * g.hx() * g.hy();
    let (ix, iy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = CellTerms { energy: 0.0, grad: [0.0; 4], hess: [[0.0; 4]; 4] };
    for (corner, xi) in CORNERS.iter().zip(gr) {
        out.energy += w * f.value(xi);
        let s = f.gradient(xi);
        // coefficient of each local node in (g_x, g_y)
        let mut a = [[0.0f64; 2]; 4];
        a[corner.0[0]][0] -= ix;
        a[corner.0[1]][0] += ix;
        a[corner.1[0]][1] -= iy;
        a[corner.1[1]][1] += iy;
        for p in 0..4 {
            out.grad[p] += w * (a[p][0] * s[0] + a[p][1] * s[1]);
        }
        if with_hessian {
            let h = f.hessian(xi);
            for p in 0..4 {
                let hp = [h[0][0] * a[p][0] + h[0][1] * a[p][1], h[1][0] * a[p][0] + h[1][1] * a[p][1]];
                for q in 0..4 {
                    out.hess[q][p] += w * (a[q][0] * hp[0] + a[q][1] * hp[1]);
                }
            }
        }
    }
    out
}

/// Energy, interior gradient and (optionally) the interior Hessian in band
/// form with half-bandwidth `n_x - 1`.
pub struct Assembly {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<BandMatrix>,
}

pub fn assemble<D: Density + ?Sized>(f: &D, u: &DiscreteField, with_hessian: bool) -> Result<Assembly, SolverError> {
    let g = u.grid;
    let terms: Vec<CellTerms> =
        (0..g.cells()).into_par_iter().map(|c| cell_terms(f, &g, &u.values, c, with_hessian)).collect();
    let n = g.interior_count();
    let mut gradient = vec![0.0; n];
    let mut hessian = with_hessian.then(|| BandMatrix::zeros(n, g.nx - 1));
    let mut energy = 0.0;
    // interior index of each node, or usize::MAX on the boundary
    let interior = |node: usize| -> usize {
        let (i, j) = (node % g.nx, node / g.nx);
        if g.is_boundary(i, j) {
            usize::MAX
        } else {
            g.interior_idx(i, j)
        }
    };
    for (c, t) in terms.iter().enumerate() {
        if !t.energy.is_finite() || t.grad.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(&g, c));
        }
        energy += t.energy;
        let nodes = cell_nodes(&g, c).map(interior);
        for p in 0..4 {
            if nodes[p] == usize::MAX {
                continue;
            }
            gradient[nodes[p]] += t.grad[p];
            if let Some(h) = hessian.as_mut() {
                for q in 0..=p {
                    if nodes[q] != usize::MAX {
                        h.add(nodes[p], nodes[q], if p == q { t.hess[p][p] } else { t.hess[p][q] });
                    }
                }
            }
        }
    }
    if let Some(h) = &hessian {
        if h.data.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteHessian);
        }
    }
    Ok(Assembly { energy, gradient, hessian })
}

/// Sup over interior nodes of `|∂J_δ/∂u_k| / (h_x h_y)`, the discrete
/// divergence of `Df_δ(∇u)`.
pub fn euler_residual<D: Density + ?Sized>(f: &D, u: &DiscreteField) -> Result<f64, SolverError> {
    let a = assemble(f, u, false)?;
    Ok(residual_norm(&u.grid, &a.gradient))
}

pub(crate) fn residual_norm(g: &Grid, gradient: &[f64]) -> f64 {
    gradient.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (g.hx() * g.hy())
}
