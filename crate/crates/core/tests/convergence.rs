//! Noise-free self-convergence and observed temporal orders.

use std::f64::consts::TAU;

use spde_core::metrics::relative_l2;
use spde_core::solvers::presets::Preset;
use spde_core::solvers::{self, EquationConfig, Physics};
use spde_core::{Grid, NoisePath};

fn final_state(cfg: &EquationConfig, u0: &[f64], v0: Option<&[f64]>) -> Vec<f64> {
    let noise = NoisePath::zero(cfg.noise, cfg.grid, cfg.n_steps(), cfg.dt()).unwrap();
    let traj = solvers::solve(cfg, u0, v0, &noise).unwrap();
    traj.last().to_vec()
}

/// Observed order from solutions at steps M, 2M, 4M.
fn observed_order(base: &EquationConfig, steps: usize, init: impl Fn(&Grid) -> (Vec<f64>, Option<Vec<f64>>)) -> f64 {
    let run = |m: usize| {
        let mut cfg = *base;
        cfg.n_t = m + 1;
        cfg.save_stride = 1;
        let (u0, v0) = init(&cfg.grid);
        final_state(&cfg, &u0, v0.as_deref())
    };
    let (a, b, c) = (run(steps), run(2 * steps), run(4 * steps));
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    (diff(&a, &b) / diff(&b, &c)).log2()
}

fn nse_vortices(grid: &Grid) -> Vec<f64> {
    grid.map2(|x, y| {
        (TAU * x).cos() + 0.8 * (TAU * (x + 2.0 * y)).sin() + 0.5 * (TAU * (3.0 * x - y)).cos()
    })
}

fn quiet(preset: Preset) -> EquationConfig {
    let mut cfg = preset.config(32).unwrap();
    cfg.sigma = 0.0;
    cfg
}

#[test]
fn kdv_resolution_self_convergence() {
    let coarse = quiet(Preset::KdvCyl);
    let mut fine = coarse;
    fine.grid = Grid::line(512, 1.0);
    fine.n_t = (coarse.n_t - 1) * 8 + 1;
    let u = final_state(&coarse, &coarse.grid.map1(|x| (TAU * x).sin()), None);
    let r = final_state(&fine, &fine.grid.map1(|x| (TAU * x).sin()), None);
    let r_on_coarse: Vec<f64> = r.iter().step_by(4).copied().collect();
    let err = relative_l2(&u, &r_on_coarse).unwrap();
    eprintln!("kdv 128 vs 512: {err:e}");
    assert!(err < 1e-3, "kdv self-convergence {err}");
}

#[test]
fn nse_resolution_self_convergence() {
    let coarse = quiet(Preset::NseVorticity);
    let mut fine = coarse;
    fine.grid = Grid::square(128, 1.0);
    fine.n_t = 2001;
    let u = final_state(&coarse, &nse_vortices(&coarse.grid), None);
    let r = final_state(&fine, &nse_vortices(&fine.grid), None);
    let r_on_coarse: Vec<f64> = (0..64)
        .flat_map(|ix| (0..64).map(move |iy| (2 * ix) * 128 + 2 * iy))
        .map(|m| r[m])
        .collect();
    let err = relative_l2(&u, &r_on_coarse).unwrap();
    eprintln!("nse 64 vs 128: {err:e}");
    assert!(err < 1e-2, "nse self-convergence {err}");
}

fn within_20_percent(observed: f64, nominal: f64) -> bool {
    (observed / nominal - 1.0).abs() <= 0.2
}

#[test]
fn ginzburg_landau_is_first_order() {
    let p = observed_order(&quiet(Preset::GinzburgLandau1), 50, |g| (g.map1(|x| x * (1.0 - x)), None));
    eprintln!("gl order {p}");
    assert!(within_20_percent(p, 1.0), "{p}");
}

#[test]
fn phi42_explicit_is_first_order() {
    let p = observed_order(&quiet(Preset::Phi42Explicit), 250, |g| {
        (g.map2(|x, y| (TAU * (x + y)).sin() + (TAU * (x + y)).cos()), None)
    });
    eprintln!("phi42 order {p}");
    assert!(within_20_percent(p, 1.0), "{p}");
}

#[test]
fn wave_is_second_order() {
    let p = observed_order(&quiet(Preset::Wave), 500, |g| {
        (g.map1(|x| (TAU * x).sin()), Some(g.map1(|x| x * (1.0 - x))))
    });
    eprintln!("wave order {p}");
    assert!(within_20_percent(p, 2.0), "{p}");
}

#[test]
fn kdv_is_fourth_order() {
    let mut cfg = quiet(Preset::KdvCyl);
    cfg.grid = Grid::line(64, 1.0);
    cfg.substeps = 1;
    // coarsest step sits inside the RK4 stability region of the advection term
    let p = observed_order(&cfg, 800, |g| (g.map1(|x| (TAU * x).sin()), None));
    eprintln!("kdv order {p}");
    assert!(within_20_percent(p, 4.0), "{p}");
}

#[test]
fn nse_is_second_order() {
    let mut cfg = quiet(Preset::NseVorticity);
    cfg.grid = Grid::square(32, 1.0);
    cfg.physics = Physics::NseVorticity {
        nu: 1e-3,
        forcing_amplitude: 0.1,
        project_mean: false,
    };
    let p = observed_order(&cfg, 100, |g| (nse_vortices(g), None));
    eprintln!("nse order {p}");
    assert!(within_20_percent(p, 2.0), "{p}");
}
