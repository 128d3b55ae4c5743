//! Linear-growth variational problems of splitting type.
//!
//! [`densities`] holds the density catalog, [`analysis`] the hypothesis
//! checks, [`solver`] the regularized Dirichlet minimizer on rectangles and
//! [`experiments`] the vanishing-viscosity diagnostics built on top.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod densities;
pub mod experiments;
pub mod quadrature;
pub mod solver;

pub use densities::{
    BaseDensity, Density, DensityError, RadialDensity, Regularization, RegularizedDensity, ScalarDensity,
    SplittingDensity,
};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
