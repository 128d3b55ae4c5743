//! Configuration parsing and run pipelines of the `splitvar` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{ConfigError, RawConfig, RunConfig};
pub use run::{execute, Check, Command, Outcome, Status};
