//! Batch simulation front end: configuration, seeded Monte-Carlo, CSV
//! export and the built-in self-test.

pub mod cdf;
pub mod config;
pub mod export;
pub mod mc;
pub mod rng;
pub mod selftest;

use thiserror::Error;

use crate::blockage::BlockageError;
use crate::field_synthesis::SynthesisError;

pub use cdf::{cdf_compute, EmpiricalCdf};
pub use config::{load_config, OrientationDist, SimConfig};
pub use mc::{monte_carlo_run, ReplicationRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Blockage(#[from] BlockageError),
    #[error("numeric check failed: {0}")]
    Numeric(String),
    #[error("empty input")]
    EmptyInput,
}

impl SimError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(..) => EXIT_IO,
            Self::Parse(_) | Self::Validation(_) | Self::Blockage(_) => EXIT_CONFIG,
            Self::Synthesis(SynthesisError::Blockage(_))
            | Self::Synthesis(SynthesisError::UnknownAntenna(_))
            | Self::Synthesis(SynthesisError::TooFewAntennas(_))
            | Self::Synthesis(SynthesisError::InvalidStep(_)) => EXIT_CONFIG,
            Self::Synthesis(_) | Self::Numeric(_) | Self::EmptyInput => EXIT_NUMERIC,
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> SimError {
    SimError::Io(path.display().to_string(), e.to_string())
}
