//! Truncated cylindrical and Q-Wiener processes on periodic grids.
//!
//! A sampled path is a sum of real "coefficients" `c`, each carrying a real
//! basis function `g_c`, a spectral weight `sqrt(lambda_c)` and a Brownian
//! increment `dB_c ~ N(0, dt)` per step:
//!
//! ```text
//! dW(x) = sum_c sqrt(lambda_c) g_c(x) dB_c
//! ```
//!
//! For the sine bases `g_c` is the basis function itself. The complex
//! exponential basis is made real by pairing mode `m` with `-m` and drawing
//! one complex coefficient per pair (real and imaginary parts each with
//! variance `dt / 2`). Modes whose partner falls outside the truncation
//! window (index `J/2` on either axis) are kept as lone real cosines/sines.
//!
//! The Q-Wiener weighting uses `sqrt(lambda_j)` on every term, which is the
//! Karhunen–Loève form of the definition.

use std::f64::consts::{PI, SQRT_2, TAU};

use ndarray::{s, Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{bin, Fft2};
use crate::grid::{Grid, Points};
use crate::rng::{hash_words, NormalStream};

/// Default cap on the truncation degree along one axis.
pub const DEFAULT_MODE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    /// `phi_j(x) = sqrt(2/L) sin(j pi x / L)`, `j = 1..=J`.
    #[serde(rename = "sine1d")]
    Sine1D { length: f64, modes: usize },
    /// Tensor product of two 1D sine bases.
    #[serde(rename = "sine2d")]
    Sine2D { lx: f64, ly: f64, jx: usize, jy: usize },
    /// `phi_{j,k} = exp(2 pi i (j x / Lx + k y / Ly)) / sqrt(Lx Ly)`,
    /// `j, k` in `-J/2+1 ..= J/2`.
    #[serde(rename = "complex_exp2d")]
    ComplexExp2D { lx: f64, ly: f64, jx: usize, jy: usize },
}

impl BasisSpec {
    pub fn validate(&self, max_modes: usize) -> Result<()> {
        let (lens, degs): (Vec<f64>, Vec<usize>) = match *self {
            BasisSpec::Sine1D { length, modes } => (vec![length], vec![modes]),
            BasisSpec::Sine2D { lx, ly, jx, jy } => (vec![lx, ly], vec![jx, jy]),
            BasisSpec::ComplexExp2D { lx, ly, jx, jy } => {
                if jx % 2 != 0 || jy % 2 != 0 {
                    return Err(Error::invalid(format!(
                        "complex exponential truncation must be even, got {jx}x{jy}"
                    )));
                }
                (vec![lx, ly], vec![jx, jy])
            }
        };
        if lens.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("basis domain lengths must be positive"));
        }
        if degs.iter().any(|&j| j == 0) {
            return Err(Error::invalid("truncation degree must be at least 1"));
        }
        if let Some(&j) = degs.iter().find(|&&j| j > max_modes) {
            return Err(Error::ResourceLimit(format!(
                "truncation degree {j} exceeds the cap of {max_modes} modes per dimension"
            )));
        }
        Ok(())
    }

    pub fn is_2d(&self) -> bool {
        !matches!(self, BasisSpec::Sine1D { .. })
    }

    fn tag(&self) -> u64 {
        match self {
            BasisSpec::Sine1D { .. } => 1,
            BasisSpec::Sine2D { .. } => 2,
            BasisSpec::ComplexExp2D { .. } => 3,
        }
    }

    /// Truncation degree per axis.
    pub fn degrees(&self) -> (usize, usize) {
        match *self {
            BasisSpec::Sine1D { modes, .. } => (modes, 1),
            BasisSpec::Sine2D { jx, jy, .. } | BasisSpec::ComplexExp2D { jx, jy, .. } => (jx, jy),
        }
    }

    /// Checks that the basis lives on the same domain as `grid`.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        let ok = match (*self, *grid) {
            (BasisSpec::Sine1D { length, .. }, Grid::OneD { length: gl, .. }) => same(length, gl),
            (
                BasisSpec::Sine2D { lx, ly, .. } | BasisSpec::ComplexExp2D { lx, ly, .. },
                Grid::TwoD { lx: gx, ly: gy, .. },
            ) => same(lx, gx) && same(ly, gy),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "basis {self:?} does not match grid {grid:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    /// Cylindrical Wiener process, `Q = I`.
    Identity,
    /// `lambda_j = (floor(j/2) + 1)^-(2r + 1 + eps)`.
    #[serde(rename = "poly_decay1d")]
    PolyDecay1D { r: f64, eps: f64 },
    /// `lambda_{j,k} = exp(-alpha (j^2 + k^2))`.
    #[serde(rename = "gauss_decay2d")]
    GaussDecay2D { alpha: f64 },
}

impl SpectrumSpec {
    pub fn validate(&self, basis: &BasisSpec) -> Result<()> {
        match *self {
            SpectrumSpec::Identity => Ok(()),
            SpectrumSpec::PolyDecay1D { r, eps } => {
                if basis.is_2d() {
                    return Err(Error::invalid("polynomial decay needs a 1D basis"));
                }
                if !(r >= 0.0 && eps > 0.0) {
                    return Err(Error::invalid("polynomial decay needs r >= 0 and eps > 0"));
                }
                Ok(())
            }
            SpectrumSpec::GaussDecay2D { alpha } => {
                if !basis.is_2d() {
                    return Err(Error::invalid("gaussian decay needs a 2D basis"));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid("gaussian decay needs alpha > 0"));
                }
                Ok(())
            }
        }
    }

    /// Covariance eigenvalue of mode `(j, k)`; `k` is ignored in 1D.
    pub fn eigenvalue(&self, j: i64, k: i64) -> f64 {
        match *self {
            SpectrumSpec::Identity => 1.0,
            SpectrumSpec::PolyDecay1D { r, eps } => {
                ((j / 2) as f64 + 1.0).powf(-(2.0 * r + 1.0 + eps))
            }
            SpectrumSpec::GaussDecay2D { alpha } => (-alpha * (j * j + k * k) as f64).exp(),
        }
    }
}

/// Everything needed to draw a noise path apart from the grid, time step and
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub basis: BasisSpec,
    pub spectrum: SpectrumSpec,
    /// Number of independent paths summed into one sample.
    #[serde(default = "one")]
    pub n_trajectories: usize,
    #[serde(default = "default_cap")]
    pub max_modes: usize,
}

fn one() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_MODE_CAP
}

impl NoiseSpec {
    pub fn new(basis: BasisSpec, spectrum: SpectrumSpec) -> Self {
        Self {
            basis,
            spectrum,
            n_trajectories: 1,
            max_modes: DEFAULT_MODE_CAP,
        }
    }

    pub fn cylindrical(basis: BasisSpec) -> Self {
        Self::new(basis, SpectrumSpec::Identity)
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.n_trajectories = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate(self.max_modes)?;
        self.spectrum.validate(&self.basis)?;
        if self.n_trajectories == 0 {
            return Err(Error::invalid("n_trajectories must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Sine mode or the constant Fourier mode.
    Real,
    PairRe,
    PairIm,
    LoneRe,
    LoneIm,
}

/// One real noise coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub j: i64,
    pub k: i64,
    pub part: Part,
    /// `sqrt(lambda)` of the underlying mode.
    pub weight: f64,
}

impl Coefficient {
    fn stream_id(&self, basis_tag: u64) -> u64 {
        // the pairing status of a Fourier mode changes with J, its stream must not
        let im = matches!(self.part, Part::PairIm | Part::LoneIm) as u64;
        hash_words(&[basis_tag, self.j as u64, self.k as u64, im])
    }
}

/// Enumerates the real coefficients of a truncated expansion in a fixed order.
pub fn coefficients(spec: &NoiseSpec) -> Result<Vec<Coefficient>> {
    spec.validate()?;
    let lam = |j: i64, k: i64| spec.spectrum.eigenvalue(j, k).sqrt();
    let out = match spec.basis {
        BasisSpec::Sine1D { modes, .. } => (1..=modes as i64)
            .map(|j| Coefficient {
                j,
                k: 0,
                part: Part::Real,
                weight: lam(j, 0),
            })
            .collect(),
        BasisSpec::Sine2D { jx, jy, .. } => {
            let mut v = Vec::with_capacity(jx * jy);
            for j in 1..=jx as i64 {
                for k in 1..=jy as i64 {
                    v.push(Coefficient {
                        j,
                        k,
                        part: Part::Real,
                        weight: lam(j, k),
                    });
                }
            }
            v
        }
        BasisSpec::ComplexExp2D { jx, jy, .. } => {
            let (hx, hy) = (jx as i64 / 2, jy as i64 / 2);
            let inside = |j: i64, k: i64| (-hx + 1..=hx).contains(&j) && (-hy + 1..=hy).contains(&k);
            let mut v = Vec::with_capacity(jx * jy);
            for j in -hx + 1..=hx {
                for k in -hy + 1..=hy {
                    let weight = lam(j, k);
                    let parts: &[Part] = if j == 0 && k == 0 {
                        &[Part::Real]
                    } else if !inside(-j, -k) {
                        &[Part::LoneRe, Part::LoneIm]
                    } else if j > 0 || (j == 0 && k > 0) {
                        &[Part::PairRe, Part::PairIm]
                    } else {
                        // represented by its partner
                        &[]
                    };
                    v.extend(parts.iter().map(|&part| Coefficient { j, k, part, weight }));
                }
            }
            v
        }
    };
    Ok(out)
}

/// Real basis function `g_c` attached to a coefficient (without the
/// spectral weight).
fn basis_value(basis: &BasisSpec, c: &Coefficient, x: f64, y: f64) -> f64 {
    match *basis {
        BasisSpec::Sine1D { length, .. } => {
            (2.0 / length).sqrt() * (c.j as f64 * PI * x / length).sin()
        }
        BasisSpec::Sine2D { lx, ly, .. } => {
            (4.0 / (lx * ly)).sqrt()
                * (c.j as f64 * PI * x / lx).sin()
                * (c.k as f64 * PI * y / ly).sin()
        }
        BasisSpec::ComplexExp2D { lx, ly, .. } => {
            let norm = 1.0 / (lx * ly).sqrt();
            let theta = TAU * (c.j as f64 * x / lx + c.k as f64 * y / ly);
            norm * match c.part {
                Part::Real => 1.0,
                Part::PairRe => SQRT_2 * theta.cos(),
                Part::PairIm => -SQRT_2 * theta.sin(),
                Part::LoneRe => theta.cos(),
                Part::LoneIm => -theta.sin(),
            }
        }
    }
}

/// Evaluates the real basis functions at `points`: row `c` is `g_c`.
pub fn eval_basis(basis: &BasisSpec, points: &Points) -> Result<Array2<f64>> {
    eval_basis_capped(basis, points, DEFAULT_MODE_CAP)
}

pub fn eval_basis_capped(basis: &BasisSpec, points: &Points, max_modes: usize) -> Result<Array2<f64>> {
    if points.is_empty() {
        return Err(Error::invalid("cannot evaluate a basis on an empty grid"));
    }
    let spec = NoiseSpec {
        max_modes,
        ..NoiseSpec::cylindrical(*basis)
    };
    let coeffs = coefficients(&spec)?;
    let pts: Vec<(f64, f64)> = match (points, basis.is_2d()) {
        (Points::OneD(p), false) => p.iter().map(|&x| (x, 0.0)).collect(),
        (Points::TwoD(p), true) => p.clone(),
        _ => return Err(Error::invalid("point dimension does not match basis")),
    };
    let mut out = Array2::zeros((coeffs.len(), pts.len()));
    for (c, mut row) in coeffs.iter().zip(out.rows_mut()) {
        for (v, &(x, y)) in row.iter_mut().zip(&pts) {
            *v = basis_value(basis, c, x, y);
        }
    }
    Ok(out)
}

/// Per-coefficient Brownian increments, summed over trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalIncrements {
    pub coefficients: Vec<Coefficient>,
    /// `[n_steps, n_coefficients]`, unweighted, each entry `~ N(0, n_traj dt)`.
    pub db: Array2<f64>,
}

/// Sampled Wiener increments on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    /// `[n_steps, n_points]`, points in grid storage order.
    pub increments: Array2<f64>,
    pub dt: f64,
    pub grid: Grid,
    pub seed: u64,
    pub spec: NoiseSpec,
    /// Present when the path was sampled with `keep_modal`.
    pub modal: Option<ModalIncrements>,
}

impl NoisePath {
    pub fn n_steps(&self) -> usize {
        self.increments.nrows()
    }

    /// A path with all increments zero, used for noise-free runs.
    pub fn zero(spec: NoiseSpec, grid: Grid, n_steps: usize, dt: f64) -> Result<Self> {
        check_dt(dt, n_steps)?;
        spec.validate()?;
        spec.basis.check_grid(&grid)?;
        let coefficients = coefficients(&spec)?;
        let db = Array2::zeros((n_steps, coefficients.len()));
        Ok(Self {
            increments: Array2::zeros((n_steps, grid.len())),
            dt,
            grid,
            seed: 0,
            spec,
            modal: Some(ModalIncrements { coefficients, db }),
        })
    }

    /// Path values `W(t_n)` with `W(0) = 0`, shape `[n_steps + 1, n_points]`.
    pub fn values(&self) -> Array2<f64> {
        let (n, p) = self.increments.dim();
        let mut w = Array2::zeros((n + 1, p));
        for i in 0..n {
            let next = &w.row(i) + &self.increments.row(i);
            w.row_mut(i + 1).assign(&next);
        }
        w
    }

    pub fn increment(&self, step: usize) -> ArrayView1<'_, f64> {
        self.increments.row(step)
    }
}

fn check_dt(dt: f64, n_steps: usize) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(Error::invalid("need at least one time step"));
    }
    Ok(())
}

/// Maps weighted coefficient values onto the grid.
enum Evaluator {
    Dense(Array2<f64>),
    Sine2D {
        phix: Array2<f64>,
        phiy: Array2<f64>,
    },
    Fourier {
        fft: Fft2,
        /// For each coefficient: (bin of m, bin of -m, factor at m, factor at -m).
        taps: Vec<(usize, usize, Complex64, Complex64)>,
        n_points: usize,
    },
}

impl Evaluator {
    fn new(basis: &BasisSpec, grid: &Grid, coeffs: &[Coefficient]) -> Result<Self> {
        match (*basis, *grid) {
            (BasisSpec::Sine2D { lx, ly, jx, jy }, Grid::TwoD { .. }) => {
                let axis = |n_modes: usize, len: f64, xs: &[f64]| {
                    Array2::from_shape_fn((n_modes, xs.len()), |(j, m)| {
                        (2.0 / len).sqrt() * ((j + 1) as f64 * PI * xs[m] / len).sin()
                    })
                };
                Ok(Evaluator::Sine2D {
                    phix: axis(jx, lx, &grid.axis_x()),
                    phiy: axis(jy, ly, &grid.axis_y()),
                })
            }
            (BasisSpec::ComplexExp2D { lx, ly, .. }, Grid::TwoD { nx, ny, .. }) => {
                let norm = 1.0 / (lx * ly).sqrt();
                let i = Complex64::i();
                let taps = coeffs
                    .iter()
                    .map(|c| {
                        let b = bin(c.j, nx) * ny + bin(c.k, ny);
                        let nb = bin(-c.j, nx) * ny + bin(-c.k, ny);
                        let pair = norm / SQRT_2;
                        let lone = norm / 2.0;
                        let (f, g) = match c.part {
                            Part::Real => (Complex64::new(norm, 0.0), Complex64::default()),
                            Part::PairRe => (pair.into(), pair.into()),
                            Part::PairIm => (i * pair, -i * pair),
                            Part::LoneRe => (lone.into(), lone.into()),
                            Part::LoneIm => (i * lone, -i * lone),
                        };
                        (b, nb, f, g)
                    })
                    .collect();
                Ok(Evaluator::Fourier {
                    fft: Fft2::new(nx, ny),
                    taps,
                    n_points: nx * ny,
                })
            }
            _ => Ok(Evaluator::Dense(eval_basis_capped(
                basis,
                &grid.points(),
                usize::MAX,
            )?)),
        }
    }

    /// `weighted[c] = sqrt(lambda_c) dB_c`; writes the grid values into `out`.
    fn apply(&self, weighted: &[f64], out: &mut [f64]) {
        match self {
            Evaluator::Dense(g) => {
                let w = ArrayView1::from(weighted);
                let v = w.dot(g);
                out.copy_from_slice(v.as_slice().expect("contiguous"));
            }
            Evaluator::Sine2D { phix, phiy } => {
                let b = ndarray::ArrayView2::from_shape((phix.nrows(), phiy.nrows()), weighted)
                    .expect("coefficient layout");
                let field = phix.t().dot(&b).dot(phiy);
                for (o, v) in out.iter_mut().zip(field.iter()) {
                    *o = *v;
                }
            }
            Evaluator::Fourier { fft, taps, n_points } => {
                let mut buf = vec![Complex64::default(); *n_points];
                for (&(b, nb, f, g), &z) in taps.iter().zip(weighted) {
                    buf[b] += f * z;
                    if g != Complex64::default() {
                        buf[nb] += g * z;
                    }
                }
                fft.inverse_unnormalized(&mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    *o = v.re;
                }
            }
        }
    }
}

/// Synthesis of a field `sum_c z_c e_c(x)` from coefficient values in the
/// layout of [`coefficients`].
pub struct Synthesis(Evaluator);

impl Synthesis {
    pub fn new(spec: &NoiseSpec, grid: &Grid, coeffs: &[Coefficient]) -> Result<Self> {
        spec.basis.check_grid(grid)?;
        Ok(Self(Evaluator::new(&spec.basis, grid, coeffs)?))
    }

    pub fn apply(&self, values: &[f64], out: &mut [f64]) {
        self.0.apply(values, out)
    }
}

/// Samples `n_steps` increments of the truncated process on `grid`.
///
/// Coefficient `c` of trajectory `r` draws from its own stream keyed by
/// `(seed, r)` and addressed by the mode index, so lowering the truncation
/// degree reproduces the same low-mode increments.
pub fn sample_path(
    spec: &NoiseSpec,
    grid: &Grid,
    n_steps: usize,
    dt: f64,
    seed: u64,
    keep_modal: bool,
) -> Result<NoisePath> {
    check_dt(dt, n_steps)?;
    grid.validate()?;
    spec.validate()?;
    spec.basis.check_grid(grid)?;
    let coeffs = coefficients(spec)?;
    let eval = Evaluator::new(&spec.basis, grid, &coeffs)?;
    let tag = spec.basis.tag();
    let sqrt_dt = dt.sqrt();
    let n_c = coeffs.len();

    let mut increments = Array2::<f64>::zeros((n_steps, grid.len()));
    let mut db = keep_modal.then(|| Array2::<f64>::zeros((n_steps, n_c)));
    // draws for a block of steps, `[step in block][coefficient]`; each
    // stream is advanced BLOCK times in a row to stay in cache
    const BLOCK: usize = 32;
    let mut block = vec![0.0; BLOCK * n_c];
    let mut weighted = vec![0.0; n_c];
    let mut slice = vec![0.0; grid.len()];

    for traj in 0..spec.n_trajectories {
        let key = hash_words(&[seed, traj as u64]);
        let mut streams: Vec<NormalStream> = coeffs
            .iter()
            .map(|c| NormalStream::new(key, c.stream_id(tag)))
            .collect();
        for start in (0..n_steps).step_by(BLOCK) {
            let len = BLOCK.min(n_steps - start);
            for (c, s) in streams.iter_mut().enumerate() {
                for b in 0..len {
                    block[b * n_c + c] = sqrt_dt * s.next();
                }
            }
            for b in 0..len {
                let draws = &block[b * n_c..(b + 1) * n_c];
                for ((w, d), c) in weighted.iter_mut().zip(draws).zip(&coeffs) {
                    *w = c.weight * d;
                }
                eval.apply(&weighted, &mut slice);
                let step = start + b;
                let mut row = increments.row_mut(step);
                row.iter_mut().zip(&slice).for_each(|(r, v)| *r += v);
                if let Some(db) = db.as_mut() {
                    let mut row = db.row_mut(step);
                    row.iter_mut().zip(draws).for_each(|(r, v)| *r += v);
                }
            }
        }
    }

    Ok(NoisePath {
        increments,
        dt,
        grid: *grid,
        seed,
        spec: *spec,
        modal: db.map(|db| ModalIncrements {
            coefficients: coeffs,
            db,
        }),
    })
}

/// Re-evaluates stored modal increments on a grid (used to check the fast
/// evaluation paths and to rebuild increments after truncation).
pub fn modal_to_grid(spec: &NoiseSpec, modal: &ModalIncrements, grid: &Grid) -> Result<Array2<f64>> {
    spec.basis.check_grid(grid)?;
    let eval = Evaluator::new(&spec.basis, grid, &modal.coefficients)?;
    let n_steps = modal.db.nrows();
    let mut out = Array2::zeros((n_steps, grid.len()));
    let mut weighted = vec![0.0; modal.coefficients.len()];
    let mut slice = vec![0.0; grid.len()];
    for step in 0..n_steps {
        for ((w, c), d) in weighted.iter_mut().zip(&modal.coefficients).zip(modal.db.row(step)) {
            *w = c.weight * d;
        }
        eval.apply(&weighted, &mut slice);
        out.row_mut(step).assign(&ArrayView1::from(&slice[..]));
    }
    Ok(out)
}

/// Discrete white noise `xi[n][m] = dW[n][m] / dt`.
pub fn increments_to_white_noise(path: &NoisePath) -> Array2<f64> {
    &path.increments / path.dt
}

/// Covariance of `W(1, p)` and `W(1, q)` from the mode sum; multiply by `t`
/// for other times.
///
/// The Fourier case sums `lambda_m cos(theta_m(p) - theta_m(q)) / (Lx Ly)`
/// over every mode of the window, which is what the Hermitian pairing has to
/// reproduce.
pub fn analytic_covariance(spec: &NoiseSpec, p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    spec.validate()?;
    let lam = |j: i64, k: i64| spec.spectrum.eigenvalue(j, k);
    let total = match spec.basis {
        BasisSpec::Sine1D { length, modes } => (1..=modes as i64)
            .map(|j| {
                let f = |x: f64| (2.0 / length).sqrt() * (j as f64 * PI * x / length).sin();
                lam(j, 0) * f(p.0) * f(q.0)
            })
            .sum(),
        BasisSpec::Sine2D { lx, ly, jx, jy } => {
            let mut acc = 0.0;
            for j in 1..=jx as i64 {
                for k in 1..=jy as i64 {
                    let f = |x: f64, y: f64| {
                        (4.0 / (lx * ly)).sqrt()
                            * (j as f64 * PI * x / lx).sin()
                            * (k as f64 * PI * y / ly).sin()
                    };
                    acc += lam(j, k) * f(p.0, p.1) * f(q.0, q.1);
                }
            }
            acc
        }
        BasisSpec::ComplexExp2D { lx, ly, jx, jy } => {
            let (hx, hy) = (jx as i64 / 2, jy as i64 / 2);
            let mut acc = 0.0;
            for j in -hx + 1..=hx {
                for k in -hy + 1..=hy {
                    let phase = TAU * (j as f64 * (p.0 - q.0) / lx + k as f64 * (p.1 - q.1) / ly);
                    acc += lam(j, k) * phase.cos() / (lx * ly);
                }
            }
            acc
        }
    };
    Ok(total * spec.n_trajectories as f64)
}

/// Restricts stored modal increments to a lower sine truncation degree.
/// Only meaningful for sine bases, where coefficients are indexed `1..=J`.
pub fn truncate_sine_2d(modal: &ModalIncrements, jx_old: usize, jy_old: usize, jx: usize, jy: usize) -> Result<ModalIncrements> {
    if jx > jx_old || jy > jy_old {
        return Err(Error::invalid("cannot truncate to a higher degree"));
    }
    let keep: Vec<usize> = (0..jx)
        .flat_map(|a| (0..jy).map(move |b| a * jy_old + b))
        .collect();
    let n = modal.db.nrows();
    let mut db = Array2::zeros((n, keep.len()));
    for (dst, &src) in keep.iter().enumerate() {
        db.slice_mut(s![.., dst]).assign(&modal.db.slice(s![.., src]));
    }
    Ok(ModalIncrements {
        coefficients: keep.iter().map(|&i| modal.coefficients[i]).collect(),
        db,
    })
}
