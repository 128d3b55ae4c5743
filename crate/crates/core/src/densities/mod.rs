//! Energy densities of linear growth, their regularizations and recession
//! functions.

mod growth;
mod planar;
mod regularized;
mod scalar;

use thiserror::Error;

pub use growth::{
    growth_constants, recession, recession_along, scalar_recession, symmetric_samples, GrowthConstants,
    RecessionEstimate, RECESSION_SCALES, RECESSION_TOLERANCE,
};
pub use planar::{sym_eigenvalues, BaseDensity, Density, RadialDensity, SplittingDensity};
pub use regularized::{regularize, Regularization, RegularizedDensity};
pub use scalar::{AtomSequence, Atoms, ScalarDensity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("{constraint} required (got {name} = {value})")]
    InvalidParameter { name: &'static str, value: f64, constraint: &'static str },
    #[error("δ ∈ (0, 1] required (got δ = {0})")]
    InvalidDelta(f64),
    #[error("unknown density `{0}`")]
    UnknownDensity(String),
    #[error("density `{density}` has no parameter `{name}`")]
    UnknownParameter { density: String, name: String },
    #[error("density `{density}` requires parameter `{name}`")]
    MissingParameter { density: String, name: &'static str },
    #[error("atom widths must be summable: {0}")]
    DivergentAtoms(String),
    #[error("expected at least {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("recession direction must be non-zero")]
    ZeroDirection,
    #[error("invalid sample range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("not of linear growth: {0}")]
    NotLinearGrowth(String),
}

/// `Φ_μ`, even extension of the double-integral profile.
pub fn phi_mu(mu: f64) -> Result<ScalarDensity, DensityError> {
    ScalarDensity::phi_mu(mu)
}

/// Minimal-surface profile `(1+|t|^k)^{1/k}`.
pub fn minimal_surface(k: f64) -> Result<ScalarDensity, DensityError> {
    ScalarDensity::minimal_surface(k)
}

/// The three borderline examples: iterated-log, softplus and a truncated
/// atom sum with the given widths.
pub fn appendix_examples(atoms: AtomSequence, n: usize) -> Result<[ScalarDensity; 3], DensityError> {
    Ok([ScalarDensity::IteratedLog, ScalarDensity::Softplus, ScalarDensity::atoms(atoms, n)?])
}

/// Default truncation of the atom example used by the catalog.
pub fn default_appendix_examples() -> [ScalarDensity; 3] {
    appendix_examples(AtomSequence::Geometric { ratio: 0.5 }, 20).expect("geometric atoms with ratio 1/2")
}
