//! Property checks run against a configuration before trusting its output.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use spde_core::grid::Points;
use spde_core::initcond::make_initial;
use spde_core::metrics::{mean_stderr, relative_l2, variance_stderr};
use spde_core::noise::{analytic_covariance, sample_path};
use spde_core::renorm::{stochastic_convolution, RenormConstant, ShiftScheme};
use spde_core::solvers::{self, EquationKind, Physics};
use spde_core::{EquationConfig, NoisePath};

use crate::config::RunConfig;
use crate::plan::Plan;
use crate::report::{sci, table};
use crate::Failure;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Monte-Carlo paths for the covariance check.
    pub paths: usize,
    /// Draws of `X` for the Wick check.
    pub wick_draws: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            paths: 10_000,
            wick_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub preset: String,
    pub j: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn table(&self) -> String {
        let rows = self
            .checks
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    sci(c.value),
                    sci(c.tolerance),
                    if c.passed { "PASS" } else { "FAIL" }.into(),
                    c.detail.clone(),
                ]
            })
            .collect();
        table(&["check", "value", "tolerance", "result", "detail"], rows)
    }
}

/// Runs the checks at the smallest configured truncation degree. Config
/// errors (including an unstable explicit Φ⁴₂ step) are returned before
/// anything is solved.
pub fn validate(run: &RunConfig, opts: &ValidateOptions) -> Result<ValidationReport, Failure> {
    run.validate()?;
    let degrees = run.degrees();
    let j = *degrees.iter().min().expect("at least one degree");
    let plan = Plan::new(run, j)?;
    let mut checks = vec![noise_covariance(&plan.cfg, opts.paths)?];
    checks.push(deterministic_limit(&plan.cfg)?);
    if plan.kind() == EquationKind::Phi42 {
        checks.extend(wick_centring(&plan.cfg, opts.wick_draws)?);
    }
    for &jj in &degrees {
        checks.push(stays_bounded(&Plan::new(run, jj)?)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        preset: run.preset.name().to_string(),
        j,
        checks,
        passed,
    })
}

const PROBE_FRACTIONS: [(f64, f64); 5] = [(0.5, 0.5), (0.1, 0.2), (0.3, 0.75), (0.05, 0.9), (0.55, 0.56)];

/// Monte-Carlo covariance of `W(1)` at five probe pairs against the mode
/// sum; the value is the largest deviation in standard errors.
pub fn noise_covariance(cfg: &EquationConfig, paths: usize) -> Result<Check, Failure> {
    let coords: Vec<(f64, f64)> = match cfg.grid.points() {
        Points::OneD(x) => x.into_iter().map(|x| (x, 0.0)).collect(),
        Points::TwoD(p) => p,
    };
    let n = coords.len();
    let pairs: Vec<(usize, usize)> = PROBE_FRACTIONS
        .iter()
        .map(|&(a, b)| ((a * n as f64) as usize, (b * n as f64) as usize))
        .collect();
    let mut prods = vec![Vec::with_capacity(paths); pairs.len()];
    for s in 0..paths as u64 {
        let w = sample_path(&cfg.noise, &cfg.grid, 1, 1.0, 0x5eed_0000 + s, false)?;
        let row = w.increments.row(0);
        for (k, &(p, q)) in pairs.iter().enumerate() {
            prods[k].push(row[p] * row[q]);
        }
    }
    let mut worst: f64 = 0.0;
    for (k, &(p, q)) in pairs.iter().enumerate() {
        let exact = analytic_covariance(&cfg.noise, coords[p], coords[q])?;
        let (m, se) = mean_stderr(&prods[k]);
        worst = worst.max((m - exact).abs() / se.max(f64::MIN_POSITIVE));
    }
    Ok(Check::below(
        "noise covariance",
        worst,
        4.0,
        format!("{paths} paths, 5 probe pairs, max deviation in stderr"),
    ))
}

fn zero_noise(cfg: &EquationConfig) -> Result<NoisePath, Failure> {
    Ok(NoisePath::zero(cfg.noise, cfg.grid, cfg.n_steps(), cfg.dt())?)
}

fn final_error(traj: &spde_core::Trajectory, exact: impl Fn(f64) -> Vec<f64>) -> Result<f64, Failure> {
    let t = *traj.times.last().expect("at least one saved slice");
    Ok(relative_l2(traj.last().as_slice().expect("row-major"), &exact(t))?)
}

/// Noise-free closed-form solution for the configured equation.
pub fn deterministic_limit(cfg: &EquationConfig) -> Result<Check, Failure> {
    let mut c = *cfg;
    c.sigma = 0.0;
    c.save_stride = 1;
    let g = c.grid;
    let check = match c.physics {
        Physics::Wave { .. } => {
            c.physics = Physics::Wave { source: 0.0 };
            let u0 = g.map1(|x| (TAU * x).sin());
            let traj = solvers::solve_wave(&u0, &vec![0.0; u0.len()], &zero_noise(&c)?, &c)?;
            let err = final_error(&traj, |t| g.map1(|x| (TAU * t).cos() * (TAU * x).sin()))?;
            Check::below("standing wave", err, 1e-3, "relative L2 at final time".into())
        }
        Physics::Kdv { diffusion, dispersion, .. } => {
            c.physics = Physics::Kdv {
                diffusion,
                dispersion,
                nonlinearity: 0.0,
            };
            let traj = solvers::solve_kdv(&g.map1(|x| (TAU * x).sin()), &zero_noise(&c)?, &c)?;
            let k = TAU;
            let err = final_error(&traj, |t| {
                g.map1(|x| (-diffusion * k * k * t).exp() * (k * x + dispersion * k.powi(3) * t).sin())
            })?;
            Check::below("kdv linear mode", err, 1e-6, "relative L2 at final time".into())
        }
        Physics::NseVorticity { nu, .. } => {
            c.physics = Physics::NseVorticity {
                nu,
                forcing_amplitude: 0.0,
                project_mean: false,
            };
            let w0 = g.map2(|x, _| TAU * TAU * (TAU * x).sin());
            let traj = solvers::solve_nse_vorticity(&w0, &zero_noise(&c)?, &c)?;
            let err = final_error(&traj, |t| {
                let d = (-nu * TAU * TAU * t).exp();
                w0.iter().map(|w| d * w).collect()
            })?;
            Check::below("vorticity viscous decay", err, 1e-6, "relative L2 at final time".into())
        }
        Physics::Phi42 { cubic } => {
            let u0 = vec![2.0; g.len()];
            let traj = solvers::solve_phi42_explicit(&u0, &zero_noise(&c)?, &c)?;
            let err = final_error(&traj, |t| vec![2.0 / (1.0 + 8.0 * cubic * t).sqrt(); u0.len()])?;
            Check::below("constant-field ODE", err, 1e-4, "relative L2 at final time".into())
        }
        Physics::GinzburgLandau { reaction, .. } => {
            c.t_final = 0.01;
            c.n_t = 11;
            let u0 = g.map1(|x| 1e-3 * (TAU * x).sin());
            let traj = solvers::solve_ginzburg_landau(&u0, &zero_noise(&c)?, &c)?;
            let amp = |u: &[f64]| -> f64 {
                let n = u.len() as f64;
                u.iter()
                    .enumerate()
                    .map(|(m, v)| v * (TAU * m as f64 / n).sin())
                    .sum::<f64>()
            };
            let growth = amp(traj.last().as_slice().expect("row-major")) / amp(&u0);
            let exact = ((reaction - TAU * TAU) * c.t_final).exp();
            Check::below(
                "linear growth rate",
                (growth / exact - 1.0).abs(),
                0.01,
                "relative error of the sin(2 pi x) growth factor".into(),
            )
        }
    };
    Ok(check)
}

/// `E[X^2 - a] = 0` and `Var X = a` at five probe points for zero initial
/// data, in standard errors.
pub fn wick_centring(cfg: &EquationConfig, draws: usize) -> Result<Vec<Check>, Failure> {
    let a = RenormConstant::new(cfg)?;
    let last = cfg.n_t - 1;
    let n = cfg.grid.len();
    let probes: Vec<usize> = PROBE_FRACTIONS.iter().map(|&(f, _)| (f * n as f64) as usize).collect();
    let u0 = vec![0.0; n];
    let mut xs = vec![Vec::with_capacity(draws); probes.len()];
    for d in 0..draws as u64 {
        let noise = sample_path(&cfg.noise, &cfg.grid, cfg.n_steps(), cfg.dt(), 0x71c4_0000 + d, true)?;
        let x = stochastic_convolution(&u0, &noise, cfg, ShiftScheme::Explicit)?;
        let row = x.last();
        for (k, &p) in probes.iter().enumerate() {
            xs[k].push(row[p]);
        }
    }
    let (mut mean_dev, mut var_dev): (f64, f64) = (0.0, 0.0);
    for (k, &p) in probes.iter().enumerate() {
        let a_p = a.field[[last, p]];
        let x2: Vec<f64> = xs[k].iter().map(|v| v * v - a_p).collect();
        let (m, se) = mean_stderr(&x2);
        mean_dev = mean_dev.max(m.abs() / se);
        let (v, se) = variance_stderr(&xs[k]);
        var_dev = var_dev.max((v - a_p).abs() / se);
    }
    Ok(vec![
        Check::below("wick square centring", mean_dev, 3.0, format!("{draws} draws, 5 probes, stderr")),
        Check::below("convolution variance = a", var_dev, 3.0, format!("{draws} draws, 5 probes, stderr")),
    ])
}

/// Sample 0 at this degree stays finite with a moderate sup norm.
pub fn stays_bounded(plan: &Plan) -> Result<Check, Failure> {
    let sup = match plan.solve(0) {
        Ok(s) => s.u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Err(spde_core::Error::Divergence { .. }) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    let initial = make_initial(&plan.initial_spec(0), &plan.cfg.grid)?;
    let start = initial.u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Check::below(
        &format!("bounded at J={}", plan.j),
        sup,
        1e3 * start.max(1.0),
        "sup norm of sample 0".into(),
    ))
}
