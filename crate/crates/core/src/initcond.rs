//! Deterministic and randomised initial data.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{wavenumber, Fft2};
use crate::grid::Grid;
use crate::rng::NormalStream;

/// Highest index in the random sine series.
pub const ETA_MODES: i64 = 10;

const ETA1_STREAM: u64 = 0xe7a1;
const ETA2_STREAM: u64 = 0xe7a2;
const GRF_STREAM: u64 = 0x67f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    GinzburgLandau,
    Kdv,
    Wave,
    Phi42,
    /// `w0 ~ N(0, 3^{3/2} (-lap + 9)^{-3})` drawn from `seed`.
    NseGaussian,
    /// `w* + w0`: `w*` drawn once from `fixed_seed`, `w0` from `seed`.
    NseShifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    pub kappa: f64,
    pub seed: u64,
    #[serde(default)]
    pub fixed_seed: u64,
}

impl InitSpec {
    pub fn new(kind: InitKind, kappa: f64, seed: u64) -> Self {
        Self {
            kind,
            kappa,
            seed,
            fixed_seed: 0,
        }
    }

    /// The presets use `kappa` in `{0, 0.1}`.
    pub fn is_canonical(&self) -> bool {
        self.kappa == 0.0 || self.kappa == 0.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    /// Initial velocity, wave equation only.
    pub v0: Option<Vec<f64>>,
}

/// Coefficients `a_{-10..=10}` of the 1D series.
pub fn eta_1d_coefficients(seed: u64) -> Vec<f64> {
    let mut s = NormalStream::new(seed, ETA1_STREAM);
    (-ETA_MODES..=ETA_MODES).map(|_| s.next()).collect()
}

/// `eta(x) = sum_k a_k / (|k| + 1)^2 sin(2 k pi x)` for given coefficients.
pub fn eta_1d_from(coeffs: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(coeffs.len(), (2 * ETA_MODES + 1) as usize);
    grid.map1(|x| {
        (-ETA_MODES..=ETA_MODES)
            .zip(coeffs)
            .map(|(k, a)| a / ((k.abs() + 1) as f64).powi(2) * (TAU * k as f64 * x).sin())
            .sum()
    })
}

pub fn eta_1d(grid: &Grid, seed: u64) -> Vec<f64> {
    eta_1d_from(&eta_1d_coefficients(seed), grid)
}

/// Coefficients `a_0` followed by `a_{j,k}`, `j`-major over `-10..=10`.
pub fn eta_2d_coefficients(seed: u64) -> Vec<f64> {
    let n = (2 * ETA_MODES + 1) as usize;
    let mut s = NormalStream::new(seed, ETA2_STREAM);
    (0..1 + n * n).map(|_| s.next()).collect()
}

/// `eta(x,y) = a_0 + sum_{j,k} a_{j,k} / (j^2 + k^2 + 1) sin((j pi x - k pi y) / 2)`.
///
/// The half-frequency sines are not 1-periodic; the series is evaluated
/// as written on the grid points of `[0, 1)^2`.
pub fn eta_2d_from(coeffs: &[f64], grid: &Grid) -> Vec<f64> {
    let n = (2 * ETA_MODES + 1) as usize;
    assert_eq!(coeffs.len(), 1 + n * n);
    grid.map2(|x, y| {
        let mut acc = coeffs[0];
        let mut c = coeffs[1..].iter();
        for j in -ETA_MODES..=ETA_MODES {
            for k in -ETA_MODES..=ETA_MODES {
                let a = c.next().expect("coefficient count");
                let w = (j * j + k * k + 1) as f64;
                acc += a / w * ((j as f64 * PI * x - k as f64 * PI * y) / 2.0).sin();
            }
        }
        acc
    })
}

pub fn eta_2d(grid: &Grid, seed: u64) -> Vec<f64> {
    eta_2d_from(&eta_2d_coefficients(seed), grid)
}

/// Covariance eigenvalue `3^{3/2} (|2 pi k|^2 + 9)^{-3}` of the vorticity
/// measure for Fourier mode `k` with physical wavenumber squared `k2`.
pub fn grf_eigenvalue(k2: f64) -> f64 {
    3f64.powf(1.5) * (k2 + 9.0).powi(-3)
}

/// Fourier coefficients `c_k` of a vorticity sample on an `nx * ny` torus
/// grid, so that `w(x_m) = sum_k c_k exp(2 pi i k.x_m)`.
///
/// Built as `c_k = sqrt(lambda_k) * FFT(white)_k / sqrt(nx ny) / sqrt(Lx Ly)`:
/// Hermitian by construction, unit-variance standard coefficients, and
/// self-conjugate (Nyquist) modes real. The mean mode is zero.
pub fn grf_coefficients(grid: &Grid, seed: u64) -> Result<Vec<Complex64>> {
    let Grid::TwoD { nx, ny, lx, ly } = *grid else {
        return Err(Error::invalid("the vorticity field needs a 2D grid"));
    };
    let fft = Fft2::new(nx, ny);
    let mut s = NormalStream::new(seed, GRF_STREAM);
    let mut buf: Vec<Complex64> = (0..nx * ny).map(|_| Complex64::new(s.next(), 0.0)).collect();
    fft.forward(&mut buf);
    let norm = 1.0 / ((nx * ny) as f64).sqrt() / (lx * ly).sqrt();
    for a in 0..nx {
        for b in 0..ny {
            let kx = TAU * wavenumber(a, nx) as f64 / lx;
            let ky = TAU * wavenumber(b, ny) as f64 / ly;
            let lam = grf_eigenvalue(kx * kx + ky * ky);
            buf[a * ny + b] *= lam.sqrt() * norm;
        }
    }
    buf[0] = Complex64::default();
    Ok(buf)
}

/// Gaussian random vorticity with zero mean.
pub fn nse_grf(grid: &Grid, seed: u64) -> Result<Vec<f64>> {
    let Grid::TwoD { nx, ny, .. } = *grid else {
        return Err(Error::invalid("the vorticity field needs a 2D grid"));
    };
    let mut c = grf_coefficients(grid, seed)?;
    Fft2::new(nx, ny).inverse_unnormalized(&mut c);
    Ok(c.into_iter().map(|z| z.re).collect())
}

/// Builds the initial state for one sample. With `kappa = 0` the result does
/// not depend on the seed.
pub fn make_initial(spec: &InitSpec, grid: &Grid) -> Result<InitialData> {
    let need = |two_d: bool| {
        if grid.is_2d() == two_d {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{:?} initial data needs a {} grid",
                spec.kind,
                if two_d { "2D" } else { "1D" }
            )))
        }
    };
    if !(spec.kappa >= 0.0 && spec.kappa.is_finite()) {
        return Err(Error::invalid("kappa must be a nonnegative number"));
    }
    let add_eta_1d = |mut base: Vec<f64>| {
        if spec.kappa != 0.0 {
            let eta = eta_1d(grid, spec.seed);
            base.iter_mut().zip(eta).for_each(|(u, e)| *u += spec.kappa * e);
        }
        base
    };
    let data = match spec.kind {
        InitKind::GinzburgLandau => {
            need(false)?;
            InitialData {
                u0: add_eta_1d(grid.map1(|x| x * (1.0 - x))),
                v0: None,
            }
        }
        InitKind::Kdv => {
            need(false)?;
            InitialData {
                u0: add_eta_1d(grid.map1(|x| (TAU * x).sin())),
                v0: None,
            }
        }
        InitKind::Wave => {
            need(false)?;
            InitialData {
                u0: add_eta_1d(grid.map1(|x| (TAU * x).sin())),
                v0: Some(grid.map1(|x| x * (1.0 - x))),
            }
        }
        InitKind::Phi42 => {
            need(true)?;
            let mut u0 = grid.map2(|x, y| (TAU * (x + y)).sin() + (TAU * (x + y)).cos());
            if spec.kappa != 0.0 {
                let eta = eta_2d(grid, spec.seed);
                u0.iter_mut().zip(eta).for_each(|(u, e)| *u += spec.kappa * e);
            }
            InitialData { u0, v0: None }
        }
        InitKind::NseGaussian => {
            need(true)?;
            InitialData {
                u0: nse_grf(grid, spec.seed)?,
                v0: None,
            }
        }
        InitKind::NseShifted => {
            need(true)?;
            let fixed = nse_grf(grid, spec.fixed_seed)?;
            let varying = nse_grf(grid, spec.seed)?;
            InitialData {
                u0: fixed.iter().zip(&varying).map(|(a, b)| a + b).collect(),
                v0: None,
            }
        }
    };
    Ok(data)
}
