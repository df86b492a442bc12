//! Time steppers for the five equations.
//!
//! All solvers share the same time grid convention: `n_t` time points
//! `t_i = i * dt`, `dt = T / (n_t - 1)`, so a run takes `n_t - 1` steps and
//! consumes one noise increment per step. Slices are saved every
//! `save_stride` points starting with the initial condition.

mod ginzburg_landau;
mod kdv;
mod nse;
mod phi42;
pub mod presets;
pub(crate) mod stencil;
mod wave;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::noise::{NoisePath, NoiseSpec};

pub use ginzburg_landau::solve_ginzburg_landau;
pub use kdv::solve_kdv;
pub use nse::{solve_nse_vorticity, vorticity_forcing};
pub use phi42::{check_stability, solve_phi42_explicit, PHI42_STABILITY_BOUND};
pub use wave::{solve_wave, wave_energy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationKind {
    GinzburgLandau,
    Kdv,
    Wave,
    NseVorticity,
    Phi42,
}

impl EquationKind {
    pub fn name(self) -> &'static str {
        match self {
            EquationKind::GinzburgLandau => "ginzburg-landau",
            EquationKind::Kdv => "kdv",
            EquationKind::Wave => "wave",
            EquationKind::NseVorticity => "nse-vorticity",
            EquationKind::Phi42 => "phi42",
        }
    }
}

/// Equation-specific coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "kebab-case")]
pub enum Physics {
    /// `u_t - u_xx = reaction u - cubic u^3 + sigma xi`
    GinzburgLandau { reaction: f64, cubic: f64 },
    /// `u_t - diffusion u_xx + dispersion u_xxx = nonlinearity u u_x + sigma xi`
    Kdv {
        diffusion: f64,
        dispersion: f64,
        nonlinearity: f64,
    },
    /// `u_tt - u_xx = source * (cos(pi u) + u^2) + sigma u xi`
    Wave { source: f64 },
    /// `w_t - nu lap w = -u.grad w + forcing_amplitude * f + sigma xi`
    NseVorticity {
        nu: f64,
        forcing_amplitude: f64,
        /// Subtract a nonzero mean from the initial vorticity instead of
        /// rejecting it.
        #[serde(default)]
        project_mean: bool,
    },
    /// `u_t = lap u - cubic u^3 + sigma xi`
    Phi42 { cubic: f64 },
}

impl Physics {
    pub fn kind(&self) -> EquationKind {
        match self {
            Physics::GinzburgLandau { .. } => EquationKind::GinzburgLandau,
            Physics::Kdv { .. } => EquationKind::Kdv,
            Physics::Wave { .. } => EquationKind::Wave,
            Physics::NseVorticity { .. } => EquationKind::NseVorticity,
            Physics::Phi42 { .. } => EquationKind::Phi42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationConfig {
    pub physics: Physics,
    pub grid: Grid,
    pub t_final: f64,
    /// Number of solver time points including `t = 0`.
    pub n_t: usize,
    /// Keep every `save_stride`-th time point.
    #[serde(default = "one")]
    pub save_stride: usize,
    /// Spatial subsampling applied when packaging the output.
    #[serde(default = "one")]
    pub space_stride: usize,
    pub sigma: f64,
    /// Deterministic sub-steps per noise step (KdV only).
    #[serde(default = "one")]
    pub substeps: usize,
    pub noise: NoiseSpec,
}

fn one() -> usize {
    1
}

impl EquationConfig {
    pub fn kind(&self) -> EquationKind {
        self.physics.kind()
    }

    pub fn n_steps(&self) -> usize {
        self.n_t.saturating_sub(1)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps() as f64
    }

    pub fn n_saved(&self) -> usize {
        self.n_t.div_ceil(self.save_stride)
    }

    pub fn saved_times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_t)
            .step_by(self.save_stride)
            .map(|i| i as f64 * dt)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let two_d = matches!(self.kind(), EquationKind::NseVorticity | EquationKind::Phi42);
        if two_d != self.grid.is_2d() {
            return Err(Error::invalid(format!(
                "{} needs a {} grid",
                self.kind().name(),
                if two_d { "2D" } else { "1D" }
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("final time must be positive"));
        }
        if self.grid.dims().iter().any(|&n| n < 8) {
            return Err(Error::invalid("spatial resolution must be at least 8"));
        }
        if self.n_t < 2 {
            return Err(Error::invalid("need at least two time points"));
        }
        if self.save_stride == 0 || self.space_stride == 0 || self.substeps == 0 {
            return Err(Error::invalid("strides and substeps must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        self.grid.subsample(self.space_stride)?;
        self.noise.validate()?;
        self.noise.basis.check_grid(&self.grid)?;
        Ok(())
    }

    /// Checks that a noise path was sampled on this configuration's grid
    /// and time step. Resampling is never done silently.
    pub fn check_noise(&self, noise: &NoisePath) -> Result<()> {
        if noise.grid != self.grid {
            return Err(Error::invalid(format!(
                "noise grid {:?} does not match solver grid {:?}",
                noise.grid, self.grid
            )));
        }
        let dt = self.dt();
        if (noise.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::invalid(format!(
                "noise dt {} does not match solver dt {dt}",
                noise.dt
            )));
        }
        if noise.n_steps() != self.n_steps() {
            return Err(Error::invalid(format!(
                "noise has {} steps, solver needs {}",
                noise.n_steps(),
                self.n_steps()
            )));
        }
        Ok(())
    }

    fn check_field(&self, name: &str, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::invalid(format!(
                "{name} has {} points, grid has {}",
                u.len(),
                self.grid.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} contains non-finite values")));
        }
        Ok(())
    }
}

/// Saved solution slices of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `[n_saved, n_points]`.
    pub values: Array2<f64>,
    pub times: Vec<f64>,
    pub grid: Grid,
}

impl Trajectory {
    pub fn n_saved(&self) -> usize {
        self.values.nrows()
    }

    pub fn slice(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn last(&self) -> ArrayView1<'_, f64> {
        self.values.row(self.values.nrows() - 1)
    }
}

/// Collects every `stride`-th state and checks for blow-up.
pub(crate) struct Recorder {
    stride: usize,
    dt: f64,
    rows: Vec<f64>,
    times: Vec<f64>,
    n_points: usize,
}

impl Recorder {
    pub(crate) fn new(cfg: &EquationConfig) -> Self {
        let n_points = cfg.grid.len();
        Self {
            stride: cfg.save_stride,
            dt: cfg.dt(),
            rows: Vec::with_capacity(cfg.n_saved() * n_points),
            times: Vec::with_capacity(cfg.n_saved()),
            n_points,
        }
    }

    /// Offers the state at time index `i`.
    pub(crate) fn offer(&mut self, i: usize, u: &[f64]) -> Result<()> {
        if let Some(bad) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: i,
                time: i as f64 * self.dt,
                reason: format!("non-finite value at grid point {bad}"),
            });
        }
        if i % self.stride == 0 {
            self.rows.extend_from_slice(u);
            self.times.push(i as f64 * self.dt);
        }
        Ok(())
    }

    pub(crate) fn finish(self, grid: Grid) -> Trajectory {
        let n = self.times.len();
        Trajectory {
            values: Array2::from_shape_vec((n, self.n_points), self.rows).expect("recorded shape"),
            times: self.times,
            grid,
        }
    }
}

/// Dispatches on the configured equation. `v0` is the initial velocity and
/// is only used by the wave equation.
pub fn solve(cfg: &EquationConfig, u0: &[f64], v0: Option<&[f64]>, noise: &NoisePath) -> Result<Trajectory> {
    match cfg.kind() {
        EquationKind::GinzburgLandau => solve_ginzburg_landau(u0, noise, cfg),
        EquationKind::Kdv => solve_kdv(u0, noise, cfg),
        EquationKind::Wave => {
            let v0 = v0.ok_or_else(|| Error::invalid("wave equation needs an initial velocity"))?;
            solve_wave(u0, v0, noise, cfg)
        }
        EquationKind::NseVorticity => solve_nse_vorticity(u0, noise, cfg),
        EquationKind::Phi42 => solve_phi42_explicit(u0, noise, cfg),
    }
}
