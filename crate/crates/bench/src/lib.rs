//! Shared fixtures for the benchmarks.

use splitvar::experiments::BoundaryPreset;
use splitvar::solver::{DiscreteField, Grid};
use splitvar::{Regularization, RegularizedDensity, ScalarDensity, SplittingDensity};

/// `Φ_{3/2} ⊕ Φ_3` with quadratic regularization.
pub fn mixed_density(delta: f64) -> RegularizedDensity {
    let base = SplittingDensity::pair(
        ScalarDensity::phi_mu(1.5).expect("valid exponent"),
        ScalarDensity::phi_mu(3.0).expect("valid exponent"),
    );
    RegularizedDensity::new(base, delta, Regularization::Quadratic).expect("valid δ")
}

/// Sine boundary data with its Coons interior on an `n × n` unit grid.
pub fn sine_start(n: usize) -> DiscreteField {
    BoundaryPreset::Sine.initial_field(Grid::unit_square(n).expect("valid grid"))
}
