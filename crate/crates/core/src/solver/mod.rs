//! Finite-difference minimization of `J_δ[u] = ∫ f_δ(∇u)` on a rectangle
//! with Dirichlet data.

mod assembly;
mod derivatives;
mod grid;
pub mod io;
pub mod linalg;
mod newton;

use thiserror::Error;

pub use assembly::{assemble, cell_gradients, discrete_energy, euler_residual, Assembly};
pub use derivatives::{check_second_difference_grid, directional_derivatives, NodalDerivatives};
pub use grid::{DiscreteField, Grid};
pub use newton::{minimize, SolveReport, SolveStatus, SolverConfig};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite density value in cell ({}, {})", cell[0], cell[1])]
    NonFinite { cell: [usize; 2] },
    #[error("non-finite Hessian entry")]
    NonFiniteHessian,
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
