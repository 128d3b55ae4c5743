//! Hypothesis checks on densities: power-law ellipticity fits, the
//! level-curve curvature probe and the exponent calculator.

mod ellipticity;
mod exponents;
mod level_curve;

use thiserror::Error;

use crate::densities::DensityError;

pub use ellipticity::{
    check_density, fit_full_ellipticity, fit_scalar_ellipticity, log_spaced, DensityCheck, EllipticityReport, ANGLES,
    MAX_CERTIFIABLE_EXPONENT,
};
pub use exponents::{
    balanced_witness, exponent_admissibility, growing_second_witness, integrability_bookkeeping, tau_conditions,
    Admissibility, BalancedWitness, ExponentSet, IntegrabilityBookkeeping, Statement, TauWitness, WitnessSource,
};
pub use level_curve::{
    lemma1_probe, trace_level_curve, LevelCurve, LevelOutcome, LevelRow, ProbeReport, ProbeVerdict, TraceOptions,
    RATIO_DECAY_SLOPE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("second derivative {value:e} ≤ 0 at ξ = ({}, {})", at[0], at[1])]
    NonConvex { at: [f64; 2], value: f64 },
    #[error("level set [f ≤ {level}] is unbounded")]
    UnboundedLevelSet { level: f64 },
    #[error("level {level} lies below min f = {minimum}")]
    LevelBelowMinimum { level: f64, minimum: f64 },
    #[error("corrector did not converge on level {level} after {points} points")]
    CorrectorFailed { level: f64, points: usize },
    #[error("level curve {level} did not close within {max_points} points")]
    NotClosed { level: f64, max_points: usize },
    #[error("{name} = {value} outside its domain: {constraint} required")]
    ExponentDomain { name: &'static str, value: f64, constraint: &'static str },
}
