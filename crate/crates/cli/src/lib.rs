//! Config-driven experiment runner for the holomimo figures.
//!
//! The binary is a thin clap wrapper around [`run`]; the acceptance tests
//! call the same entry point and inspect the returned [`RunReport`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

use std::fmt;

use holomimo_core::Error as CoreError;

pub use config::ExperimentConfig;
pub use experiment::{run, RunReport};

/// Failure of a run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the config cannot be parsed or names something invalid.
    Config(String),
    /// Exit 2: the model could not be evaluated numerically.
    Numerical(CoreError),
    /// Exit 1: an output could not be written.
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Parameter and layout errors are config errors; the rest are numerical.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGeometry(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::DimensionMismatch(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
