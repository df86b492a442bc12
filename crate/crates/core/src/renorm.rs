//! Wick-renormalised Φ⁴₂ via the decomposition `u = X + v`.
//!
//! * `X` solves the linear heat equation driven by the truncated noise. Its
//!   Gaussian part is advanced mode by mode with the exact Ornstein–Uhlenbeck
//!   transition, reusing the Brownian increments stored in the
//!   [`NoisePath`]; the heat flow of `u0` is advanced on the grid with the
//!   same discrete Laplacian as the shift equation.
//! * `a(t, x)` is the variance of the Gaussian part, computed from the mode
//!   sum. The Wick powers are `X^2 - a` and `X^3 - 3 a X`.
//! * `v` solves `v_t = lap v - (v^3 + 3 v^2 X + 3 v X2 + X3)`, `v(0) = 0`.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{wavenumber, Fft2};
use crate::grid::Grid;
use crate::noise::{BasisSpec, NoisePath, NoiseSpec};
use crate::solvers::stencil::laplacian_5pt;
use crate::solvers::{EquationConfig, Physics, Trajectory};

/// Time discretisation shared by the heat flow of `u0` and the shift
/// equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftScheme {
    /// Explicit Euler with the five-point Laplacian. With zero noise
    /// `X + v` then follows the explicit Φ⁴₂ scheme step for step.
    #[default]
    Explicit,
    /// Backward Euler for the Laplacian, explicit Wick-cubic source.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormOptions {
    #[serde(default)]
    pub scheme: ShiftScheme,
    /// `|v|` above this aborts the sample.
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

fn default_bound() -> f64 {
    1e6
}

impl Default for RenormOptions {
    fn default() -> Self {
        Self {
            scheme: ShiftScheme::Explicit,
            divergence_bound: default_bound(),
        }
    }
}

/// Dirichlet–Laplacian eigenvalue of sine mode `(j, k)`.
fn heat_eigenvalue(j: i64, k: i64, lx: f64, ly: f64) -> f64 {
    PI * PI * ((j * j) as f64 / (lx * lx) + (k * k) as f64 / (ly * ly))
}

fn sine_box(spec: &NoiseSpec) -> Result<(f64, f64, usize, usize)> {
    match spec.basis {
        BasisSpec::Sine2D { lx, ly, jx, jy } => Ok((lx, ly, jx, jy)),
        other => Err(Error::invalid(format!(
            "renormalisation needs the 2D sine basis, got {other:?}"
        ))),
    }
}

/// `a(t, x) = sigma^2 n_traj sum_m lambda_Q,m phi_m(x)^2 (1 - exp(-2 mu_m t)) / (2 mu_m)`
/// at a single point, with `mu_m` the heat eigenvalue.
pub fn renorm_constant_at(spec: &NoiseSpec, sigma: f64, t: f64, p: (f64, f64)) -> Result<f64> {
    let (lx, ly, jx, jy) = sine_box(spec)?;
    let mut acc = 0.0;
    for j in 1..=jx as i64 {
        let fx = (2.0 / lx) * (j as f64 * PI * p.0 / lx).sin().powi(2);
        for k in 1..=jy as i64 {
            let fy = (2.0 / ly) * (k as f64 * PI * p.1 / ly).sin().powi(2);
            let mu = heat_eigenvalue(j, k, lx, ly);
            let q = spec.spectrum.eigenvalue(j, k);
            acc += q * fx * fy * (-(-2.0 * mu * t).exp_m1()) / (2.0 * mu);
        }
    }
    Ok(sigma * sigma * spec.n_trajectories as f64 * acc)
}

/// The renormalisation constant on the grid at every solver time point.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormConstant {
    /// `[n_t, n_points]`
    pub field: Array2<f64>,
    pub dt: f64,
}

impl RenormConstant {
    /// Evaluates the mode sum as `(Phi_x^2)^T A(t) (Phi_y^2)` per time point.
    pub fn new(cfg: &EquationConfig) -> Result<Self> {
        let (lx, ly, jx, jy) = sine_box(&cfg.noise)?;
        let Grid::TwoD { nx, ny, .. } = cfg.grid else {
            return Err(Error::invalid("renormalisation needs a 2D grid"));
        };
        let (xs, ys) = (cfg.grid.axis_x(), cfg.grid.axis_y());
        let sq = |n_modes: usize, len: f64, pts: &[f64]| {
            Array2::from_shape_fn((n_modes, pts.len()), |(j, m)| {
                (2.0 / len) * ((j + 1) as f64 * PI * pts[m] / len).sin().powi(2)
            })
        };
        let (px, py) = (sq(jx, lx, &xs), sq(jy, ly, &ys));
        let scale = cfg.sigma * cfg.sigma * cfg.noise.n_trajectories as f64;
        let mu = Array2::from_shape_fn((jx, jy), |(j, k)| {
            heat_eigenvalue(j as i64 + 1, k as i64 + 1, lx, ly)
        });
        let q = Array2::from_shape_fn((jx, jy), |(j, k)| {
            cfg.noise.spectrum.eigenvalue(j as i64 + 1, k as i64 + 1)
        });
        let dt = cfg.dt();
        let mut field = Array2::zeros((cfg.n_t, nx * ny));
        for n in 1..cfg.n_t {
            let t = n as f64 * dt;
            let weights = Zip::from(&mu)
                .and(&q)
                .map_collect(|&m, &q| scale * q * (-(-2.0 * m * t).exp_m1()) / (2.0 * m));
            let a = px.t().dot(&weights).dot(&py);
            field
                .row_mut(n)
                .assign(&ArrayView1::from(a.as_standard_layout().as_slice().expect("contiguous")));
        }
        Ok(Self { field, dt })
    }

    /// Spatial mean at every time point.
    pub fn spatial_mean(&self) -> Vec<f64> {
        self.field
            .rows()
            .into_iter()
            .map(|r| r.mean().unwrap_or(0.0))
            .collect()
    }
}

/// Pointwise Wick powers `(X^2 - a, X^3 - 3 a X)`.
pub fn wick_powers(x: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if x.dim() != a.dim() {
        return Err(Error::invalid(format!(
            "Wick powers need matching shapes, got {:?} and {:?}",
            x.dim(),
            a.dim()
        )));
    }
    let x2 = Zip::from(&x).and(&a).map_collect(|&x, &a| x * x - a);
    let x3 = Zip::from(&x).and(&a).map_collect(|&x, &a| x * x * x - 3.0 * a * x);
    Ok((x2, x3))
}

/// Applies `(I - dt lap_h)^{-1}` through the FFT diagonalisation of the
/// five-point Laplacian.
struct ImplicitHeat {
    fft: Fft2,
    inv: Vec<f64>,
}

impl ImplicitHeat {
    fn new(grid: &Grid, dt: f64) -> Self {
        let Grid::TwoD { nx, ny, .. } = *grid else {
            unreachable!()
        };
        let (dx, dy) = grid.spacing();
        let mut inv = vec![0.0; nx * ny];
        for a in 0..nx {
            let sx = 4.0 / (dx * dx) * (PI * wavenumber(a, nx) as f64 / nx as f64).sin().powi(2);
            for b in 0..ny {
                let sy = 4.0 / (dy * dy) * (PI * wavenumber(b, ny) as f64 / ny as f64).sin().powi(2);
                inv[a * ny + b] = 1.0 / (1.0 + dt * (sx + sy));
            }
        }
        Self {
            fft: Fft2::new(nx, ny),
            inv,
        }
    }

    fn apply(&self, u: &mut [f64]) {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf.iter_mut().zip(&self.inv).for_each(|(z, s)| *z *= s);
        self.fft.inverse(&mut buf);
        u.iter_mut().zip(buf).for_each(|(v, z)| *v = z.re);
    }
}

fn heat_step(scheme: ShiftScheme, implicit: Option<&ImplicitHeat>, grid: &Grid, dt: f64, u: &mut [f64], lap: &mut [f64]) {
    match scheme {
        ShiftScheme::Explicit => {
            laplacian_5pt(u, grid, lap);
            u.iter_mut().zip(lap.iter()).for_each(|(v, l)| *v += dt * l);
        }
        ShiftScheme::SemiImplicit => implicit.expect("implicit solver").apply(u),
    }
}

fn check_setup(cfg: &EquationConfig, noise: &NoisePath) -> Result<()> {
    if !matches!(cfg.physics, Physics::Phi42 { .. }) {
        return Err(Error::invalid("renormalisation is defined for the Phi^4_2 setup"));
    }
    cfg.validate()?;
    cfg.check_noise(noise)?;
    sine_box(&noise.spec)?;
    if noise.spec != cfg.noise {
        return Err(Error::invalid("noise path was sampled with a different basis"));
    }
    if noise.modal.is_none() {
        return Err(Error::invalid(
            "renormalisation needs the modal increments; sample with keep_modal",
        ));
    }
    Ok(())
}

/// Stochastic convolution at every solver time point, `[n_t, n_points]`.
fn convolution_all_steps(u0: &[f64], noise: &NoisePath, cfg: &EquationConfig, scheme: ShiftScheme) -> Result<Array2<f64>> {
    check_setup(cfg, noise)?;
    let (lx, ly, _, _) = sine_box(&cfg.noise)?;
    let modal = noise.modal.as_ref().expect("checked");
    let dt = cfg.dt();
    let n_points = cfg.grid.len();
    if u0.len() != n_points {
        return Err(Error::invalid("u0 does not match the grid"));
    }

    // OU transition per mode: decay and the factor that rescales dB to the
    // exact stochastic-integral variance
    let (decay, gain): (Vec<f64>, Vec<f64>) = modal
        .coefficients
        .iter()
        .map(|c| {
            let mu = heat_eigenvalue(c.j, c.k, lx, ly);
            let e = (-mu * dt).exp();
            let g = (-(-2.0 * mu * dt).exp_m1() / (2.0 * mu * dt)).sqrt();
            (e, cfg.sigma * c.weight * g)
        })
        .unzip();

    let synth = crate::noise::Synthesis::new(&cfg.noise, &cfg.grid, &modal.coefficients)?;
    let implicit = (scheme == ShiftScheme::SemiImplicit).then(|| ImplicitHeat::new(&cfg.grid, dt));

    let mut out = Array2::zeros((cfg.n_t, n_points));
    let mut heat = u0.to_vec();
    let mut lap = vec![0.0; n_points];
    let mut coeff = vec![0.0; modal.coefficients.len()];
    let mut gaussian = vec![0.0; n_points];
    out.row_mut(0).assign(&ArrayView1::from(u0));
    for n in 0..cfg.n_steps() {
        heat_step(scheme, implicit.as_ref(), &cfg.grid, dt, &mut heat, &mut lap);
        for (((c, e), g), db) in coeff.iter_mut().zip(&decay).zip(&gain).zip(modal.db.row(n)) {
            *c = e * *c + g * db;
        }
        synth.apply(&coeff, &mut gaussian);
        let mut row = out.row_mut(n + 1);
        for ((r, h), z) in row.iter_mut().zip(&heat).zip(&gaussian) {
            *r = h + z;
        }
    }
    Ok(out)
}

fn saved(all: &Array2<f64>, cfg: &EquationConfig) -> Trajectory {
    let values = all.slice(s![..;cfg.save_stride, ..]).to_owned();
    Trajectory {
        values,
        times: cfg.saved_times(),
        grid: cfg.grid,
    }
}

/// Solution of `X_t = lap X + sigma xi`, `X(0) = u0`, on the saved times.
pub fn stochastic_convolution(u0: &[f64], noise: &NoisePath, cfg: &EquationConfig, scheme: ShiftScheme) -> Result<Trajectory> {
    let all = convolution_all_steps(u0, noise, cfg, scheme)?;
    Ok(saved(&all, cfg))
}

/// Integrates the shift equation given `X`, `X2`, `X3` at every solver time
/// point. Returns `v` at every time point.
pub fn solve_shift(
    x: ArrayView2<f64>,
    x2: ArrayView2<f64>,
    x3: ArrayView2<f64>,
    cfg: &EquationConfig,
    opts: &RenormOptions,
) -> Result<Array2<f64>> {
    let shape = (cfg.n_t, cfg.grid.len());
    if x.dim() != shape || x2.dim() != shape || x3.dim() != shape {
        return Err(Error::invalid(format!(
            "shift equation inputs must all be {shape:?}"
        )));
    }
    let Physics::Phi42 { cubic } = cfg.physics else {
        return Err(Error::invalid("shift equation needs the Phi^4_2 setup"));
    };
    let dt = cfg.dt();
    let n_points = shape.1;
    let implicit = (opts.scheme == ShiftScheme::SemiImplicit).then(|| ImplicitHeat::new(&cfg.grid, dt));
    let mut out = Array2::zeros(shape);
    let mut v = vec![0.0; n_points];
    let mut lap = vec![0.0; n_points];
    for n in 0..cfg.n_steps() {
        let (xr, x2r, x3r) = (x.row(n), x2.row(n), x3.row(n));
        let source = |m: usize, v: f64| {
            let xm = xr[m];
            cubic * (v * v * v + 3.0 * v * v * xm + 3.0 * v * x2r[m] + x3r[m])
        };
        match opts.scheme {
            ShiftScheme::Explicit => {
                laplacian_5pt(&v, &cfg.grid, &mut lap);
                for m in 0..n_points {
                    v[m] += dt * (lap[m] - source(m, v[m]));
                }
            }
            ShiftScheme::SemiImplicit => {
                for m in 0..n_points {
                    v[m] -= dt * source(m, v[m]);
                }
                implicit.as_ref().expect("built").apply(&mut v);
            }
        }
        if let Some(bad) = v.iter().position(|z| !(z.abs() <= opts.divergence_bound)) {
            return Err(Error::Divergence {
                step: n + 1,
                time: (n + 1) as f64 * dt,
                reason: format!("|v| exceeded {} at grid point {bad}", opts.divergence_bound),
            });
        }
        out.row_mut(n + 1).assign(&ArrayView1::from(&v[..]));
    }
    Ok(out)
}

/// All intermediate fields of one renormalised sample, on the saved times.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormBundle {
    pub x: Trajectory,
    /// `a(t, x)` on the saved times.
    pub a_field: Array2<f64>,
    /// Spatial mean of `a` on the saved times.
    pub a_mean: Vec<f64>,
    pub x2: Trajectory,
    pub x3: Trajectory,
    /// Stored as `u - X`, so `u - X == v` holds exactly.
    pub v: Trajectory,
    pub u: Trajectory,
    pub degrees: (usize, usize),
}

/// Runs convolution, Wick powers and the shift equation; `u = X + v`.
/// `constant` is deterministic per configuration and can be shared across
/// samples.
pub fn solve_phi42_renormalized(
    u0: &[f64],
    noise: &NoisePath,
    cfg: &EquationConfig,
    constant: &RenormConstant,
    opts: &RenormOptions,
) -> Result<RenormBundle> {
    if constant.field.dim() != (cfg.n_t, cfg.grid.len()) || (constant.dt - cfg.dt()).abs() > 1e-15 {
        return Err(Error::invalid("renormalisation constant was built for another setup"));
    }
    let x = convolution_all_steps(u0, noise, cfg, opts.scheme)?;
    let (x2, x3) = wick_powers(x.view(), constant.field.view())?;
    let v = solve_shift(x.view(), x2.view(), x3.view(), cfg, opts)?;
    let u = &x + &v;
    let v_stored = &u - &x;
    let (jx, jy) = cfg.noise.basis.degrees();
    let a_field = constant.field.slice(s![..;cfg.save_stride, ..]).to_owned();
    let a_mean = a_field.rows().into_iter().map(|r| r.mean().unwrap_or(0.0)).collect();
    Ok(RenormBundle {
        x: saved(&x, cfg),
        a_field,
        a_mean,
        x2: saved(&x2, cfg),
        x3: saved(&x3, cfg),
        v: saved(&v_stored, cfg),
        u: saved(&u, cfg),
        degrees: (jx, jy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use crate::solvers::presets::Preset;
    use approx::assert_relative_eq;

    fn setup(j: usize) -> (EquationConfig, NoisePath) {
        let cfg = Preset::Phi42Renormalized.config(j).unwrap();
        let noise = NoisePath::zero(cfg.noise, cfg.grid, cfg.n_steps(), cfg.dt()).unwrap();
        (cfg, noise)
    }

    #[test]
    fn constant_starts_at_zero_and_matches_pointwise_sum() {
        let (cfg, _) = setup(4);
        let c = RenormConstant::new(&cfg).unwrap();
        assert!(c.field.row(0).iter().all(|&v| v == 0.0));
        let (xs, ys) = (cfg.grid.axis_x(), cfg.grid.axis_y());
        for &(ix, iy, n) in &[(3, 5, 10), (16, 16, 249), (7, 30, 100)] {
            let t = n as f64 * cfg.dt();
            let direct = renorm_constant_at(&cfg.noise, cfg.sigma, t, (xs[ix], ys[iy])).unwrap();
            assert_relative_eq!(c.field[[n, ix * 32 + iy]], direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_mode_constant_closed_form() {
        let spec = NoiseSpec::cylindrical(BasisSpec::Sine2D {
            lx: 1.0,
            ly: 1.0,
            jx: 1,
            jy: 1,
        });
        let (x, y, t, sigma) = (0.3, 0.6, 0.01, 0.1);
        let phi = 2.0 * (PI * x).sin() * (PI * y).sin();
        let lam = 2.0 * PI * PI;
        let expected = sigma * sigma * phi * phi * (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam);
        assert_relative_eq!(
            renorm_constant_at(&spec, sigma, t, (x, y)).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn wick_powers_of_zero_and_of_unrenormalised() {
        let a = Array2::from_elem((2, 3), 0.25);
        let z = Array2::zeros((2, 3));
        let (x2, x3) = wick_powers(z.view(), a.view()).unwrap();
        assert!(x2.iter().all(|&v| v == -0.25));
        assert!(x3.iter().all(|&v| v == 0.0));
        let x = Array2::from_elem((2, 3), 1.5);
        let (x2, x3) = wick_powers(x.view(), Array2::zeros((2, 3)).view()).unwrap();
        assert!(x2.iter().all(|&v| v == 2.25));
        assert!(x3.iter().all(|&v| v == 3.375));
        assert!(wick_powers(x.view(), Array2::zeros((3, 2)).view()).is_err());
    }

    #[test]
    fn shift_from_zero_inputs_stays_zero() {
        let (cfg, _) = setup(2);
        let z = Array2::zeros((cfg.n_t, cfg.grid.len()));
        let v = solve_shift(z.view(), z.view(), z.view(), &cfg, &RenormOptions::default()).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shift_first_step_from_constant_x() {
        let (cfg, _) = setup(2);
        let c = 0.7;
        let shape = (cfg.n_t, cfg.grid.len());
        let x = Array2::from_elem(shape, c);
        let (x2, x3) = wick_powers(x.view(), Array2::zeros(shape).view()).unwrap();
        for scheme in [ShiftScheme::Explicit, ShiftScheme::SemiImplicit] {
            let opts = RenormOptions {
                scheme,
                ..Default::default()
            };
            let v = solve_shift(x.view(), x2.view(), x3.view(), &cfg, &opts).unwrap();
            for &val in v.row(1) {
                assert_relative_eq!(val, -cfg.dt() * c * c * c, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn shift_divergence_is_reported() {
        let (cfg, _) = setup(2);
        let shape = (cfg.n_t, cfg.grid.len());
        let x3 = Array2::from_elem(shape, -1e9);
        let z = Array2::zeros(shape);
        let err = solve_shift(z.view(), z.view(), x3.view(), &cfg, &RenormOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn missing_modal_data_is_rejected() {
        let (cfg, _) = setup(2);
        let noise = crate::noise::sample_path(&cfg.noise, &cfg.grid, cfg.n_steps(), cfg.dt(), 1, false).unwrap();
        let u0 = vec![0.0; cfg.grid.len()];
        assert!(stochastic_convolution(&u0, &noise, &cfg, ShiftScheme::Explicit).is_err());
    }

    #[test]
    fn noiseless_convolution_is_the_discrete_heat_flow() {
        let (cfg, noise) = setup(2);
        let u0 = cfg.grid.map2(|x, _| (2.0 * PI * x).sin());
        let x = stochastic_convolution(&u0, &noise, &cfg, ShiftScheme::Explicit).unwrap();
        let dx = 1.0 / 32.0;
        let lam_h = 4.0 / (dx * dx) * (PI * dx).sin().powi(2);
        let n = cfg.n_steps();
        let factor = (1.0 - cfg.dt() * lam_h).powi(n as i32);
        for (a, b) in x.last().iter().zip(&u0) {
            assert!((a - factor * b).abs() < 1e-12);
        }
        // and within a percent of the continuous semigroup
        let exact = (-4.0 * PI * PI * cfg.t_final).exp();
        assert!((factor / exact - 1.0).abs() < 0.01);
    }
}
