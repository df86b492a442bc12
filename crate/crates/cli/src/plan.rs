//! Per-(preset, J) sampling plan: seeds, initial data and one solve.

use ndarray::Array2;
use spde_core::dataset::{broadcast_time, downsample, saved_white_noise, subsample_block, Dims, Task};
use spde_core::initcond::{make_initial, InitKind, InitSpec, InitialData};
use spde_core::noise::sample_path;
use spde_core::renorm::{solve_phi42_renormalized, RenormConstant, RenormOptions};
use spde_core::rng::{child_seed, Purpose};
use spde_core::solvers::presets::{Method, Preset};
use spde_core::solvers::{self, EquationKind};
use spde_core::{EquationConfig, NoisePath, Trajectory};

use crate::config::{equation_kind, name_stem, RunConfig};
use crate::Failure;

pub struct Plan {
    pub preset: Preset,
    pub task: Task,
    pub j: usize,
    pub cfg: EquationConfig,
    pub kappa: f64,
    pub master_seed: u64,
    pub renorm: RenormOptions,
    /// Shared by every sample of a renormalised plan.
    pub constant: Option<RenormConstant>,
}

/// Everything one solve produced, before packaging.
pub struct Solved {
    pub noise: NoisePath,
    pub initial: InitialData,
    /// Saved trajectory on the full solver grid.
    pub u: Trajectory,
    /// `a(t, x)` on the saved times, renormalised plans only.
    pub a_field: Option<Array2<f64>>,
}

impl Plan {
    pub fn new(run: &RunConfig, j: usize) -> Result<Self, Failure> {
        let cfg = run.equation_config(j)?;
        let constant = match run.preset.method() {
            Some(Method::Reno) => Some(RenormConstant::new(&cfg).map_err(|e| Failure::Config(e.to_string()))?),
            _ => None,
        };
        Ok(Self {
            preset: run.preset,
            task: run.task,
            j,
            cfg,
            kappa: run.kappa(),
            master_seed: run.master_seed,
            renorm: run.renorm,
            constant,
        })
    }

    pub fn kind(&self) -> EquationKind {
        equation_kind(self.preset)
    }

    pub fn method(&self) -> Option<Method> {
        self.preset.method()
    }

    pub fn stem(&self) -> &'static str {
        name_stem(self.preset)
    }

    fn seed(&self, index: u64, purpose: Purpose) -> u64 {
        child_seed(self.master_seed, self.kind().name(), index, purpose)
    }

    pub fn noise_seed(&self, index: u64) -> u64 {
        self.seed(index, Purpose::Noise)
    }

    pub fn initial_seed(&self, index: u64) -> u64 {
        self.seed(index, Purpose::InitialCondition)
    }

    pub fn initial_spec(&self, index: u64) -> InitSpec {
        let kind = match self.kind() {
            EquationKind::GinzburgLandau => InitKind::GinzburgLandau,
            EquationKind::Kdv => InitKind::Kdv,
            EquationKind::Wave => InitKind::Wave,
            EquationKind::Phi42 => InitKind::Phi42,
            EquationKind::NseVorticity => match self.task {
                Task::Xi => InitKind::NseGaussian,
                Task::U0Xi => InitKind::NseShifted,
            },
        };
        let fixed = self.seed(0, Purpose::FixedInitialCondition);
        let mut spec = match self.task {
            Task::Xi => InitSpec::new(kind, 0.0, self.initial_seed(index)),
            Task::U0Xi => InitSpec::new(kind, self.kappa, self.initial_seed(index)),
        };
        spec.fixed_seed = fixed;
        if kind == InitKind::NseGaussian {
            // the xi task keeps one fixed draw for every sample
            spec.seed = fixed;
        }
        spec
    }

    pub fn noise(&self, index: u64) -> Result<NoisePath, spde_core::Error> {
        let keep_modal = self.constant.is_some();
        sample_path(
            &self.cfg.noise,
            &self.cfg.grid,
            self.cfg.n_steps(),
            self.cfg.dt(),
            self.noise_seed(index),
            keep_modal,
        )
    }

    pub fn solve(&self, index: u64) -> Result<Solved, spde_core::Error> {
        let noise = self.noise(index)?;
        let initial = make_initial(&self.initial_spec(index), &self.cfg.grid)?;
        let (u, a_field) = match &self.constant {
            Some(c) => {
                let b = solve_phi42_renormalized(&initial.u0, &noise, &self.cfg, c, &self.renorm)?;
                (b.u, Some(b.a_field))
            }
            None => (solvers::solve(&self.cfg, &initial.u0, initial.v0.as_deref(), &noise)?, None),
        };
        Ok(Solved {
            noise,
            initial,
            u,
            a_field,
        })
    }

    /// Column names in file order.
    pub fn columns(&self) -> Vec<String> {
        let mut c = vec!["xi".to_string()];
        if self.task == Task::U0Xi {
            c.push("u0".into());
        }
        if self.constant.is_some() {
            c.push("a_eps".into());
        }
        c.push("u".into());
        c
    }

    /// Dims of `n` packaged samples.
    pub fn dims(&self, n: usize) -> Dims {
        let grid = self.cfg.grid.subsample(self.cfg.space_stride).expect("validated stride");
        Dims::for_grid(n, self.cfg.n_saved(), &grid)
    }

    pub fn saved_times(&self) -> Vec<f64> {
        self.cfg.saved_times()
    }

    /// One sample's column blocks, each `[T, points]` on the output grid.
    pub fn package(&self, s: &Solved) -> Result<Vec<Array2<f64>>, spde_core::Error> {
        let stride = self.cfg.space_stride;
        let grid = &self.cfg.grid;
        let mut out = vec![saved_white_noise(&s.noise, self.cfg.save_stride, stride)?];
        if self.task == Task::U0Xi {
            let u0 = subsample_block(&Array2::from_shape_vec((1, s.initial.u0.len()), s.initial.u0.clone()).expect("one row"), grid, stride);
            out.push(broadcast_time(u0.as_slice().expect("row-major"), self.cfg.n_saved()));
        }
        if let Some(a) = &s.a_field {
            out.push(subsample_block(a, grid, stride));
        }
        out.push(downsample(&s.u, 1, stride)?.values);
        Ok(out)
    }
}
