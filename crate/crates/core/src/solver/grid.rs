use serde::{Deserialize, Serialize};

use super::SolverError;

/// Tensor grid on a rectangle. Node `(i, j)` sits at
/// `(x_min + i·h_x, y_min + j·h_y)` and is stored at index `j·n_x + i`
/// (row-major, `x` fastest).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(bounds: [f64; 4], nx: usize, ny: usize) -> Result<Self, SolverError> {
        let [x_min, x_max, y_min, y_max] = bounds;
        if nx < 3 || ny < 3 {
            return Err(SolverError::InvalidGrid(format!("need at least 3 nodes per axis, got {nx}×{ny}")));
        }
        if !(x_max > x_min && y_max > y_min) || bounds.iter().any(|b| !b.is_finite()) {
            return Err(SolverError::InvalidGrid(format!(
                "bounds [{x_min}, {x_max}]×[{y_min}, {y_max}] are not a rectangle"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    /// `[0,1]²` with `n` nodes per axis.
    pub fn unit_square(n: usize) -> Result<Self, SolverError> {
        Self::new([0.0, 1.0, 0.0, 1.0], n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.y_max
        } else {
            self.y_min + j as f64 * self.hy()
        }
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    pub fn interior_count(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Index among interior nodes, `(j-1)(n_x-2) + (i-1)`.
    pub fn interior_idx(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 2) + (i - 1)
    }

    pub fn cells(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }
}

/// Nodal values on a grid; boundary nodes carry Dirichlet data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub boundary: Vec<bool>,
}

impl DiscreteField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, SolverError> {
        if values.len() != grid.len() {
            return Err(SolverError::InvalidGrid(format!(
                "{} values for a {}×{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        let mut boundary = vec![false; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                boundary[grid.idx(i, j)] = grid.is_boundary(i, j);
            }
        }
        Ok(Self { grid, values, boundary })
    }

    /// Samples `u` at every node.
    pub fn from_fn(grid: Grid, u: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(u(grid.x(i), grid.y(j)));
            }
        }
        Self::from_values(grid, values).expect("sized by grid")
    }

    /// Boundary values of `u`, interior filled by transfinite bilinear
    /// interpolation of the four edges.
    pub fn with_boundary(grid: Grid, u: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::from_fn(grid, u);
        field.fill_interior();
        field
    }

    /// Replaces the interior by the Coons patch of the boundary values.
    pub fn fill_interior(&mut self) {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let v = |i: usize, j: usize| self.values[g.idx(i, j)];
        let mut out = self.values.clone();
        for j in 1..ny - 1 {
            let t = j as f64 / (ny - 1) as f64;
            for i in 1..nx - 1 {
                let s = i as f64 / (nx - 1) as f64;
                let edges = (1.0 - t) * v(i, 0) + t * v(i, ny - 1) + (1.0 - s) * v(0, j) + s * v(nx - 1, j);
                let corners = (1.0 - s) * (1.0 - t) * v(0, 0)
                    + s * (1.0 - t) * v(nx - 1, 0)
                    + (1.0 - s) * t * v(0, ny - 1)
                    + s * t * v(nx - 1, ny - 1);
                out[g.idx(i, j)] = edges - corners;
            }
        }
        self.values = out;
    }

    pub fn interior_values(&self) -> Vec<f64> {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.interior_count());
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                out.push(self.values[g.idx(i, j)]);
            }
        }
        out
    }

    pub fn set_interior(&mut self, interior: &[f64]) {
        let g = self.grid;
        let mut k = 0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                self.values[g.idx(i, j)] = interior[k];
                k += 1;
            }
        }
    }

    /// `(min, max)` over boundary nodes.
    pub fn boundary_range(&self) -> (f64, f64) {
        self.values
            .iter()
            .zip(&self.boundary)
            .filter(|(_, &b)| b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ |u - v| h_x h_y` over nodes, trapezoidal weights.
    pub fn l1_distance(&self, other: &DiscreteField) -> f64 {
        let g = self.grid;
        let mut sum = 0.0;
        for j in 0..g.ny {
            let wy = if j == 0 || j == g.ny - 1 { 0.5 } else { 1.0 };
            for i in 0..g.nx {
                let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
                let k = g.idx(i, j);
                sum += wx * wy * (self.values[k] - other.values[k]).abs();
            }
        }
        sum * g.hx() * g.hy()
    }
}
