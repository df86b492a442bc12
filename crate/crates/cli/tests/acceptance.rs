//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use spde_core::dataset::{flatten, read_parquet, reshape, Task};
use spde_core::metrics::{mean_stderr, relative_l2, variance_stderr};
use spde_core::noise::sample_path;
use spde_core::renorm::{solve_phi42_renormalized, stochastic_convolution, RenormConstant, RenormOptions, ShiftScheme};
use spde_core::solvers::presets::Preset;
use spde_core::solvers::{self, EquationConfig, Physics};
use spde_core::{Grid, NoisePath};
use spdegen::bench::{bench, BenchOptions};
use spdegen::compare::{compare_phi42, CompareOptions};
use spdegen::generate::{generate, GenerateOptions};
use spdegen::plan::Plan;
use spdegen::RunConfig;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Runs `f`, turning a panic into a failed outcome.
fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome + std::panic::UnwindSafe) -> bool {
    let start = Instant::now();
    let o = std::panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    let verdict = if o.passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict}  {name}  [{:.1} s]  {}",
        start.elapsed().as_secs_f64(),
        o.detail
    );
    o.passed
}

fn zero_noise(cfg: &EquationConfig) -> NoisePath {
    NoisePath::zero(cfg.noise, cfg.grid, cfg.n_steps(), cfg.dt()).unwrap()
}

fn quiet(preset: Preset) -> EquationConfig {
    let mut cfg = preset.config(32).unwrap();
    cfg.sigma = 0.0;
    cfg
}

fn final_state(cfg: &EquationConfig, u0: &[f64], v0: Option<&[f64]>) -> Vec<f64> {
    solvers::solve(cfg, u0, v0, &zero_noise(cfg)).unwrap().last().to_vec()
}

// 1

fn noise_statistics() -> Outcome {
    let start = Instant::now();
    let cfg = Preset::GinzburgLandau1.config(32).unwrap();
    let dt = cfg.dt();
    let vals: Vec<f64> = (0..10_000)
        .map(|s| sample_path(&cfg.noise, &cfg.grid, 1, dt, 90_000 + s, false).unwrap().increments[[0, 64]])
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let (var, se) = variance_stderr(&vals);
    let exact: f64 = (1..=32).map(|j| 2.0 * (j as f64 * PI * 0.5).sin().powi(2)).sum::<f64>() * dt;
    let z = (var - exact).abs() / se;
    outcome(
        z < 3.0 && secs < 10.0 && (exact - 32.0 * dt).abs() < 1e-15,
        format!("var {var:.4e} vs 32 dt = {exact:.4e}, {z:.2} stderr, sampling {secs:.2} s"),
    )
}

// 2

fn preset_fidelity() -> Outcome {
    common::check_config_files();
    common::check_configs();
    outcome(true, format!("{} configs match the reference values", common::ROWS.len()))
}

// 3

fn deterministic_limits() -> Outcome {
    let start = Instant::now();
    let mut errs = Vec::new();

    let mut c = quiet(Preset::Wave);
    c.physics = Physics::Wave { source: 0.0 };
    c.save_stride = 1;
    let u0 = c.grid.map1(|x| (TAU * x).sin());
    let u = final_state(&c, &u0, Some(&vec![0.0; u0.len()]));
    let exact = c.grid.map1(|x| (TAU * c.t_final).cos() * (TAU * x).sin());
    errs.push(("wave", relative_l2(&u, &exact).unwrap(), 1e-3));

    let mut c = quiet(Preset::KdvCyl);
    let (nu, delta) = (0.001, 0.1);
    c.physics = Physics::Kdv {
        diffusion: nu,
        dispersion: delta,
        nonlinearity: 0.0,
    };
    c.save_stride = 1;
    let u = final_state(&c, &c.grid.map1(|x| (TAU * x).sin()), None);
    let t = c.t_final;
    let exact = c
        .grid
        .map1(|x| (-nu * TAU * TAU * t).exp() * (TAU * x + delta * TAU.powi(3) * t).sin());
    errs.push(("kdv", relative_l2(&u, &exact).unwrap(), 1e-6));

    let mut c = quiet(Preset::NseVorticity);
    c.physics = Physics::NseVorticity {
        nu: 1e-4,
        forcing_amplitude: 0.0,
        project_mean: false,
    };
    c.save_stride = 1;
    let w0 = c.grid.map2(|x, y| (TAU * x).sin() + (TAU * y).cos());
    let u = final_state(&c, &w0, None);
    let decay = (-1e-4 * TAU * TAU * c.t_final).exp();
    let exact: Vec<f64> = w0.iter().map(|w| w * decay).collect();
    errs.push(("nse", relative_l2(&u, &exact).unwrap(), 1e-6));

    let c = quiet(Preset::Phi42Explicit);
    let u = final_state(&c, &vec![2.0; c.grid.len()], None);
    let exact = vec![2.0 / (1.0 + 8.0 * c.t_final).sqrt(); u.len()];
    errs.push(("phi42", relative_l2(&u, &exact).unwrap(), 1e-4));

    let mut c = quiet(Preset::GinzburgLandau1);
    c.t_final = 0.01;
    c.n_t = 11;
    let u0 = c.grid.map1(|x| 1e-4 * (TAU * x).sin());
    let u = final_state(&c, &u0, None);
    let project = |v: &[f64]| v.iter().zip(&u0).map(|(a, b)| a * b).sum::<f64>() / u0.iter().map(|b| b * b).sum::<f64>();
    let exact = ((3.0 - 4.0 * PI * PI) * c.t_final).exp();
    errs.push(("gl growth", (project(&u) / exact - 1.0).abs(), 1e-2));

    let secs = start.elapsed().as_secs_f64();
    let ok = errs.iter().all(|&(_, e, tol)| e < tol) && secs < 120.0;
    let detail = errs
        .iter()
        .map(|(n, e, tol)| format!("{n} {e:.2e}<{tol:.0e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, detail)
}

// 4

fn observed_order(base: &EquationConfig, steps: usize, init: impl Fn(&Grid) -> (Vec<f64>, Option<Vec<f64>>)) -> f64 {
    let at = |m: usize| {
        let mut c = *base;
        c.n_t = m + 1;
        c.save_stride = 1;
        let (u0, v0) = init(&c.grid);
        final_state(&c, &u0, v0.as_deref())
    };
    let (a, b, c) = (at(steps), at(2 * steps), at(4 * steps));
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    (diff(&a, &b) / diff(&b, &c)).log2()
}

fn vortices(g: &Grid) -> Vec<f64> {
    g.map2(|x, y| (TAU * x).cos() + 0.8 * (TAU * (x + 2.0 * y)).sin() + 0.5 * (TAU * (3.0 * x - y)).cos())
}

fn self_convergence() -> Outcome {
    let coarse = quiet(Preset::KdvCyl);
    let mut fine = coarse;
    fine.grid = Grid::line(512, 1.0);
    fine.n_t = (coarse.n_t - 1) * 8 + 1;
    let u = final_state(&coarse, &coarse.grid.map1(|x| (TAU * x).sin()), None);
    let r = final_state(&fine, &fine.grid.map1(|x| (TAU * x).sin()), None);
    let r: Vec<f64> = r.iter().step_by(4).copied().collect();
    let kdv = relative_l2(&u, &r).unwrap();

    let coarse = quiet(Preset::NseVorticity);
    let mut fine = coarse;
    fine.grid = Grid::square(128, 1.0);
    fine.n_t = 2001;
    let u = final_state(&coarse, &vortices(&coarse.grid), None);
    let r = final_state(&fine, &vortices(&fine.grid), None);
    let r: Vec<f64> = (0..64)
        .flat_map(|ix| (0..64).map(move |iy| 2 * ix * 128 + 2 * iy))
        .map(|m| r[m])
        .collect();
    let nse = relative_l2(&u, &r).unwrap();

    let mut orders = Vec::new();
    orders.push((
        "gl",
        observed_order(&quiet(Preset::GinzburgLandau1), 50, |g| (g.map1(|x| x * (1.0 - x)), None)),
        1.0,
    ));
    orders.push((
        "phi42",
        observed_order(&quiet(Preset::Phi42Explicit), 250, |g| {
            (g.map2(|x, y| (TAU * (x + y)).sin() + (TAU * (x + y)).cos()), None)
        }),
        1.0,
    ));
    orders.push((
        "wave",
        observed_order(&quiet(Preset::Wave), 500, |g| {
            (g.map1(|x| (TAU * x).sin()), Some(g.map1(|x| x * (1.0 - x))))
        }),
        2.0,
    ));
    let mut kdv_cfg = quiet(Preset::KdvCyl);
    kdv_cfg.grid = Grid::line(64, 1.0);
    kdv_cfg.substeps = 1;
    orders.push(("kdv", observed_order(&kdv_cfg, 800, |g| (g.map1(|x| (TAU * x).sin()), None)), 4.0));
    let mut nse_cfg = quiet(Preset::NseVorticity);
    nse_cfg.grid = Grid::square(32, 1.0);
    nse_cfg.physics = Physics::NseVorticity {
        nu: 1e-3,
        forcing_amplitude: 0.1,
        project_mean: false,
    };
    orders.push(("nse", observed_order(&nse_cfg, 100, |g| (vortices(g), None)), 2.0));

    let orders_ok = orders.iter().all(|&(_, p, n)| (p / n - 1.0).abs() <= 0.2);
    let detail = format!(
        "kdv 128/512 {kdv:.2e}, nse 64/128 {nse:.2e}, orders {}",
        orders
            .iter()
            .map(|(name, p, n)| format!("{name} {p:.2} ({n})"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    outcome(kdv < 1e-3 && nse < 1e-2 && orders_ok, detail)
}

// 5 and 6 share the zero-initial convolution draws

const PROBES: [(usize, usize); 5] = [(16, 16), (5, 9), (1, 30), (24, 7), (11, 20)];
const DRAWS: u64 = 10_000;

fn phi42(j: usize) -> EquationConfig {
    Preset::Phi42Renormalized.config(j).unwrap()
}

fn noise(cfg: &EquationConfig, seed: u64) -> NoisePath {
    sample_path(&cfg.noise, &cfg.grid, cfg.n_steps(), cfg.dt(), seed, true).unwrap()
}

/// Final-time `X` at the probes for zero initial data.
fn probe_draws(cfg: &EquationConfig) -> Vec<[f64; 5]> {
    let u0 = vec![0.0; cfg.grid.len()];
    (0..DRAWS)
        .map(|d| {
            let x = stochastic_convolution(&u0, &noise(cfg, 70_000 + d), cfg, ShiftScheme::Explicit).unwrap();
            let last = x.last();
            PROBES.map(|(i, j)| last[i * 32 + j])
        })
        .collect()
}

/// `a` at one grid point from the mode sum with eigenvalues `pi^2 (j^2 + k^2)`.
fn a_oracle(j_max: usize, sigma: f64, t: f64, x: f64, y: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=j_max {
        for k in 1..=j_max {
            let lam = PI * PI * (j * j + k * k) as f64;
            let phi = 2.0 * (j as f64 * PI * x).sin() * (k as f64 * PI * y).sin();
            acc += phi * phi * (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam);
        }
    }
    sigma * sigma * acc
}

fn wick_correctness(draws: &[[f64; 5]]) -> Outcome {
    let cfg = phi42(8);
    let t = cfg.t_final;
    let mut worst: f64 = 0.0;
    for (p, &(ix, iy)) in PROBES.iter().enumerate() {
        let a = a_oracle(8, cfg.sigma, t, ix as f64 / 32.0, iy as f64 / 32.0);
        let w2: Vec<f64> = draws.iter().map(|d| d[p] * d[p] - a).collect();
        let (m, se) = mean_stderr(&w2);
        worst = worst.max(m.abs() / se);
    }

    let a = RenormConstant::new(&cfg).unwrap();
    let u0 = cfg.grid.map2(|x, y| (TAU * x).sin() * (TAU * y).cos());
    let b = solve_phi42_renormalized(&u0, &noise(&cfg, 3), &cfg, &a, &RenormOptions::default()).unwrap();
    let (mut defn, mut literal2, mut literal3, mut total) = (0usize, 0usize, 0usize, 0usize);
    let mut gap: f64 = 0.0;
    for (((&x, &a), &x2), &x3) in b
        .x
        .values
        .iter()
        .zip(b.a_field.iter())
        .zip(b.x2.values.iter())
        .zip(b.x3.values.iter())
    {
        total += 1;
        if x2.to_bits() != (x * x - a).to_bits() || x3.to_bits() != (x * x * x - 3.0 * a * x).to_bits() {
            defn += 1;
        }
        if (x * x - x2).to_bits() != a.to_bits() {
            literal2 += 1;
            gap = gap.max((x * x - x2 - a).abs() / (x * x).max(a));
        }
        if (x * x * x - x3).to_bits() != (3.0 * a * x).to_bits() {
            literal3 += 1;
        }
    }
    println!(
        "             note: rearranged X*X - X2 == a differs at {literal2} of {total} points, \
         X^3 - X3 == 3aX at {literal3}; largest gap {gap:.1e} relative to max(X^2, a), the rounding of the stored difference"
    );
    outcome(
        worst < 3.0 && defn == 0,
        format!("E[X2] within {worst:.2} stderr at 5 probes over {DRAWS} draws, definitional Wick powers bitwise at {total} points"),
    )
}

fn renorm_constant(draws: &[(usize, Vec<[f64; 5]>)]) -> Outcome {
    let mut fields = Vec::new();
    for j in [2, 8, 32, 64, 128] {
        fields.push(RenormConstant::new(&phi42(j)).unwrap());
    }
    let zero = fields.iter().all(|f| f.field.row(0).iter().all(|&v| v == 0.0));
    let mono_t = fields.iter().all(|f| {
        (1..f.field.nrows()).all(|t| f.field.row(t).iter().zip(f.field.row(t - 1).iter()).all(|(a, b)| a >= b))
    });
    let mono_j = fields
        .windows(2)
        .all(|w| w[1].field.iter().zip(w[0].field.iter()).all(|(hi, lo)| hi >= lo));

    let cfg = phi42(8);
    let mut oracle_err: f64 = 0.0;
    for (f, j) in fields.iter().zip([2, 8, 32, 64, 128]) {
        for &(ix, iy) in &PROBES {
            let got = f.field[[cfg.n_t - 1, ix * 32 + iy]];
            let want = a_oracle(j, cfg.sigma, cfg.t_final, ix as f64 / 32.0, iy as f64 / 32.0);
            oracle_err = oracle_err.max((got / want - 1.0).abs());
        }
    }

    let mut worst: f64 = 0.0;
    for (j, xs) in draws {
        for (p, &(ix, iy)) in PROBES.iter().enumerate() {
            let a = a_oracle(*j, cfg.sigma, cfg.t_final, ix as f64 / 32.0, iy as f64 / 32.0);
            let vals: Vec<f64> = xs.iter().map(|d| d[p]).collect();
            let (var, se) = variance_stderr(&vals);
            worst = worst.max((var - a).abs() / se);
        }
    }
    outcome(
        zero && mono_t && mono_j && oracle_err < 1e-10 && worst < 3.0,
        format!(
            "a(0)=0 {zero}, monotone in t {mono_t} and J {mono_j}, mode-sum rel err {oracle_err:.1e}, \
             Var X within {worst:.2} stderr at J=2,8"
        ),
    )
}

// 7

/// Non-mean energy above `k_cut` by a direct DFT.
fn hf_fraction(f: &[f64], n: usize, k_cut: f64) -> f64 {
    let (mut high, mut total) = (0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for x in 0..n {
                for y in 0..n {
                    let ph = -TAU * ((a * x + b * y) % n) as f64 / n as f64;
                    re += f[x * n + y] * ph.cos();
                    im += f[x * n + y] * ph.sin();
                }
            }
            let k = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            let e = re * re + im * im;
            total += e;
            if k(a).hypot(k(b)) > k_cut {
                high += e;
            }
        }
    }
    high / total
}

fn figure_reproduction() -> Outcome {
    let start = Instant::now();
    let opts = CompareOptions {
        j: 128,
        samples: 300,
        t_index: None,
        k_cut: 8.0,
    };
    let (report, fields) = compare_phi42(&RunConfig::new(Preset::Phi42Renormalized), &opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (hr, he) = (hf_fraction(&fields.reno, 32, 8.0), hf_fraction(&fields.expl, 32, 8.0));
    let agree = (hr - report.hf_fraction_reno).abs() < 1e-9 * he.max(1e-30) + 1e-12
        && (he - report.hf_fraction_expl).abs() < 1e-9 * he + 1e-12;
    outcome(
        report.samples == 300 && report.t_index == 249 && hr < he && agree && secs < 1800.0,
        format!("HF fraction reno {hr:.3e} < expl {he:.3e} at t index {} over {} pairs", report.t_index, report.samples),
    )
}

// 8

fn smoke_dir(dir: &Path, preset: Preset, task: Task) -> RunConfig {
    let mut run = RunConfig::new(preset);
    run.task = task;
    run.j = vec![*preset.j_grid().iter().min().unwrap()];
    run.samples = 2;
    run.output_dir = Some(dir.to_path_buf());
    run
}

const NAMES: [(&str, &str); 8] = [
    ("Phi41_01-xi-32-2.parquet", "Phi41_01-u0_xi-32-2.parquet"),
    ("Phi41_1-xi-32-2.parquet", "Phi41_1-u0_xi-32-2.parquet"),
    ("KdV_cyl-xi-32-2.parquet", "KdV_cyl-u0_xi-32-2.parquet"),
    ("KdV_Q-xi-32-2.parquet", "KdV_Q-u0_xi-32-2.parquet"),
    ("Wave-xi-32-2.parquet", "Wave-u0_xi-32-2.parquet"),
    ("NS-xi-32-2.parquet", "NS-u0_xi-32-2.parquet"),
    ("Phi42+_expl_xi_eps_2_2.parquet", "Phi42+_expl_u0_xi_eps_2_2.parquet"),
    ("Phi42+_reno_xi_eps_2_2.parquet", "Phi42+_reno_u0_xi_eps_2_2.parquet"),
];

fn round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let presets = [
        Preset::GinzburgLandau01,
        Preset::GinzburgLandau1,
        Preset::KdvCyl,
        Preset::KdvQ,
        Preset::Wave,
        Preset::NseVorticity,
        Preset::Phi42Explicit,
        Preset::Phi42Renormalized,
    ];
    let mut files = 0;
    let mut problems = Vec::new();
    for (p, names) in presets.iter().zip(NAMES) {
        for (task, want) in [(Task::Xi, names.0), (Task::U0Xi, names.1)] {
            let run = smoke_dir(dir.path(), *p, task);
            let out = generate(&run, &GenerateOptions::default()).unwrap();
            let path = &out[0].path;
            if path.file_name().unwrap() != want {
                problems.push(format!("{} named {}", p.name(), path.display()));
            }
            let rec = read_parquet(path).unwrap();
            let plan = Plan::new(&run, run.j[0]).unwrap();
            let dims = &rec.meta.dims;
            for (row, &i) in rec.meta.sample_indices.iter().enumerate() {
                let blocks = plan.package(&plan.solve(i).unwrap()).unwrap();
                for (col, block) in rec.columns.iter().zip(&blocks) {
                    let t = reshape(&col.data, dims).unwrap();
                    if flatten(&t) != col.data {
                        problems.push(format!("{want}/{}: flatten(reshape) differs", col.name));
                    }
                    // tensor index (n, t, x[, y]) against the solver's (t, x-major point)
                    let same = block.indexed_iter().all(|((ti, m), &v)| {
                        let idx: Vec<usize> = match dims.y {
                            Some(ny) => vec![row, ti, m / ny, m % ny],
                            None => vec![row, ti, m],
                        };
                        t[idx.as_slice()].to_bits() == (v as f32).to_bits()
                    });
                    if !same || block.len() != dims.per_sample() {
                        problems.push(format!("{want}/{}: row {row} differs from the solver output", col.name));
                    }
                }
            }
            files += 1;
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{files} smoke files round-trip bitwise with the expected names")
        } else {
            problems.join("; ")
        },
    )
}

// 9

fn determinism() -> Outcome {
    let mut problems = Vec::new();
    for (preset, j) in [(Preset::KdvQ, 32), (Preset::NseVorticity, 32), (Preset::Phi42Renormalized, 8)] {
        let files: Vec<_> = [1, 3]
            .iter()
            .map(|&workers| {
                let dir = tempfile::tempdir().unwrap();
                let mut run = RunConfig::new(preset);
                run.j = vec![j];
                run.samples = 3;
                run.batch_size = 2;
                run.workers = Some(workers);
                run.output_dir = Some(dir.path().to_path_buf());
                let path = generate(&run, &GenerateOptions::default()).unwrap()[0].path.clone();
                (read_parquet(&path).unwrap(), std::fs::read(&path).unwrap(), dir)
            })
            .collect();
        let cols_equal = files[0]
            .0
            .columns
            .iter()
            .zip(&files[1].0.columns)
            .all(|(a, b)| a.name == b.name && a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        if !cols_equal {
            problems.push(format!("{} columns differ", preset.name()));
        }
        if files[0].1 != files[1].1 {
            problems.push(format!("{} file bytes differ", preset.name()));
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            "3 presets, 1 vs 3 workers: identical columns and file bytes".to_string()
        } else {
            problems.join("; ")
        },
    )
}

// 10

fn benchmark() -> Outcome {
    let opts = BenchOptions {
        presets: vec![Preset::Phi42Renormalized, Preset::Phi42Explicit],
        j: Some(128),
        warmup: 1,
        repeats: 5,
        nt_scaling: false,
    };
    let r = bench(&RunConfig::new(Preset::Phi42Explicit), &opts).unwrap();
    let reno = r.mean_of(Preset::Phi42Renormalized).unwrap();
    let expl = r.mean_of(Preset::Phi42Explicit).unwrap();
    outcome(
        reno > expl,
        format!("J=128 per sample: reno {:.1} ms, expl {:.1} ms", reno * 1e3, expl * 1e3),
    )
}

fn main() {
    let mut ok = true;
    ok &= run(1, "noise statistics", noise_statistics);
    ok &= run(2, "preset fidelity", preset_fidelity);
    ok &= run(3, "deterministic limits", deterministic_limits);
    ok &= run(4, "self-convergence and orders", self_convergence);
    let draws8 = probe_draws(&phi42(8));
    let d8 = draws8.clone();
    ok &= run(5, "Wick correctness", move || wick_correctness(&d8));
    let draws = vec![(2, probe_draws(&phi42(2))), (8, draws8)];
    ok &= run(6, "renormalisation constant", move || renorm_constant(&draws));
    ok &= run(7, "mean-field high frequencies, 300 pairs", figure_reproduction);
    ok &= run(8, "dataset round trip and names", round_trip);
    ok &= run(9, "end-to-end determinism", determinism);
    ok &= run(10, "benchmark ordering", benchmark);
    if !ok {
        std::process::exit(1);
    }
}
