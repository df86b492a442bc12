//! Numerics for stochastic PDE dataset generation.
//!
//! The crate is organised bottom-up:
//!
//! * [`noise`] samples truncated cylindrical and Q-Wiener processes and turns
//!   them into discrete white-noise forcing.
//! * [`initcond`] builds the deterministic and randomised initial data.
//! * [`solvers`] time-steps the Ginzburg–Landau, KdV, wave, vorticity and
//!   explicit Φ⁴₂ equations.
//! * [`renorm`] builds the Wick-renormalised Φ⁴₂ solution `u = X + v`.
//! * [`dataset`] flattens trajectories and reads/writes Parquet files.
//! * [`metrics`] holds the error, spectral and timing diagnostics.

pub mod dataset;
pub mod error;
pub mod fft;
pub mod grid;
pub mod initcond;
pub mod metrics;
pub mod noise;
pub mod renorm;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use grid::Grid;
pub use noise::{BasisSpec, NoisePath, SpectrumSpec};
pub use solvers::{EquationConfig, EquationKind, Trajectory};
