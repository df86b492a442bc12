//! Batch front end: dataset generation, validation, the Φ⁴₂ method
//! comparison and solver benchmarks.

pub mod bench;
pub mod compare;
pub mod config;
pub mod generate;
pub mod plan;
pub mod report;
pub mod validate;

use thiserror::Error;

pub use config::RunConfig;

/// Errors that map to distinct process exit codes.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("all samples diverged: {0}")]
    Divergence(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] spde_core::Error),
    #[error("{0}")]
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(spde_core::Error::InvalidArgument(_) | spde_core::Error::ResourceLimit(_)) => 2,
            Failure::Divergence(_) | Failure::Core(spde_core::Error::Divergence { .. }) => 3,
            Failure::Validation(_) => 4,
            _ => 1,
        }
    }
}
