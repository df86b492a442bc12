//! Columnar dataset layout, downsampling, naming and Parquet I/O.
//!
//! Every signal of a file is one flat column. Columns share the dimensions
//! `(N, T, X[, Y])` and are flattened row-major, samples outermost:
//! element `(n, t, x, y)` sits at `((n * T + t) * X + x) * Y + y`.

mod parquet_io;

use ndarray::{s, Array2, ArrayD, IxDyn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::noise::NoisePath;
use crate::solvers::presets::Method;
use crate::solvers::{EquationConfig, EquationKind, Trajectory};

pub use parquet_io::{read_parquet, sidecar_path, write_parquet, DatasetWriter, META_KEY};

/// Bumped whenever a solver change alters output bits.
pub const SCHEME_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub t: usize,
    pub x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
}

impl Dims {
    pub fn per_sample(&self) -> usize {
        self.t * self.x * self.y.unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.n * self.per_sample()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut v = vec![self.n, self.t, self.x];
        v.extend(self.y);
        v
    }

    pub fn for_grid(n: usize, t: usize, grid: &Grid) -> Self {
        match *grid {
            Grid::OneD { n: x, .. } => Dims { n, t, x, y: None },
            Grid::TwoD { nx, ny, .. } => Dims {
                n,
                t,
                x: nx,
                y: Some(ny),
            },
        }
    }
}

/// Row-major flatten; the tensor's axes are taken as `(N, T, X[, Y])`.
pub fn flatten<T: Copy>(a: &ArrayD<T>) -> Vec<T> {
    a.iter().copied().collect()
}

/// Inverse of [`flatten`].
pub fn reshape<T: Copy>(data: &[T], dims: &Dims) -> Result<ArrayD<T>> {
    if data.len() != dims.len() {
        return Err(Error::invalid(format!(
            "column has {} values, dims {:?} need {}",
            data.len(),
            dims.shape(),
            dims.len()
        )));
    }
    Ok(ArrayD::from_shape_vec(IxDyn(&dims.shape()), data.to_vec()).expect("length checked"))
}

/// Keeps every `t_stride`-th saved slice and every `x_stride`-th grid point
/// per axis, starting at index 0. No filtering.
pub fn downsample(traj: &Trajectory, t_stride: usize, x_stride: usize) -> Result<Trajectory> {
    if t_stride == 0 || traj.n_saved() % t_stride != 0 {
        return Err(Error::invalid(format!(
            "time stride {t_stride} does not divide {} slices",
            traj.n_saved()
        )));
    }
    let grid = traj.grid.subsample(x_stride)?;
    let rows: Vec<usize> = (0..traj.n_saved()).step_by(t_stride).collect();
    let mut values = Array2::zeros((rows.len(), grid.len()));
    for (o, &r) in rows.iter().enumerate() {
        let src = traj.values.row(r);
        let dst = subsample_row(src.as_slice().expect("row-major"), &traj.grid, x_stride);
        values.row_mut(o).assign(&ndarray::ArrayView1::from(&dst[..]));
    }
    Ok(Trajectory {
        values,
        times: rows.iter().map(|&r| traj.times[r]).collect(),
        grid,
    })
}

fn subsample_row(row: &[f64], grid: &Grid, stride: usize) -> Vec<f64> {
    match *grid {
        Grid::OneD { .. } => row.iter().step_by(stride).copied().collect(),
        Grid::TwoD { nx, ny, .. } => {
            let mut out = Vec::with_capacity((nx / stride) * (ny / stride));
            for ix in (0..nx).step_by(stride) {
                out.extend(row[ix * ny..(ix + 1) * ny].iter().step_by(stride));
            }
            out
        }
    }
}

/// Discrete forcing on the saved time grid: row 0 is zero, row `i` is
/// `(W(t_{i s}) - W(t_{(i-1) s})) / (s dt)`, then spatially subsampled.
pub fn saved_white_noise(noise: &NoisePath, save_stride: usize, space_stride: usize) -> Result<Array2<f64>> {
    if save_stride == 0 {
        return Err(Error::invalid("save stride must be positive"));
    }
    let grid = noise.grid.subsample(space_stride)?;
    let n_rows = (noise.n_steps() + 1).div_ceil(save_stride);
    let mut out = Array2::zeros((n_rows, grid.len()));
    let mut acc = vec![0.0; noise.grid.len()];
    for i in 1..n_rows {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for step in (i - 1) * save_stride..i * save_stride {
            acc.iter_mut()
                .zip(noise.increments.row(step))
                .for_each(|(a, d)| *a += d);
        }
        let scale = 1.0 / (save_stride as f64 * noise.dt);
        let row: Vec<f64> = subsample_row(&acc, &noise.grid, space_stride)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
    }
    Ok(out)
}

/// `xi -> u` with a fixed initial condition, or `(u0, xi) -> u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Xi,
    U0Xi,
}

impl Task {
    pub fn tag(self) -> &'static str {
        match self {
            Task::Xi => "xi",
            Task::U0Xi => "u0_xi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSample {
    pub index: u64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub preset: String,
    pub equation: EquationKind,
    /// Name stem used in file names, e.g. `KdV_Q`.
    pub name_stem: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub j: usize,
    pub sigma: f64,
    pub kappa: f64,
    /// Samples requested; rows present may be fewer if some diverged.
    pub requested: usize,
    pub master_seed: u64,
    pub split_seed: u64,
    /// Sample index of each row, in row order.
    pub sample_indices: Vec<u64>,
    /// Noise seed of each row.
    pub noise_seeds: Vec<u64>,
    #[serde(default)]
    pub failures: Vec<FailedSample>,
    pub columns: Vec<String>,
    pub dims: Dims,
    /// Time of each saved slice.
    pub times: Vec<f64>,
    pub config: EquationConfig,
    pub scheme_version: String,
    /// How the `a_eps` column was reduced, if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_eps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

impl DatasetMeta {
    /// File name per the dataset naming conventions.
    pub fn file_name(&self) -> String {
        file_name(&self.name_stem, self.equation, self.task, self.method, self.j, self.requested)
    }
}

/// `{stem}-{task}-{J}-{N}.parquet`; Φ⁴₂ files follow the loader
/// example, `Phi42+_{reno|expl}_{xi_eps|u0_xi_eps}_{J}_{N}.parquet`.
pub fn file_name(stem: &str, equation: EquationKind, task: Task, method: Option<Method>, j: usize, n: usize) -> String {
    if equation == EquationKind::Phi42 {
        let m = method.unwrap_or(Method::Expl).tag();
        format!("{stem}_{m}_{}_eps_{j}_{n}.parquet", task.tag())
    } else {
        format!("{stem}-{}-{j}-{n}.parquet", task.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: Vec<f32>,
}

impl Column {
    pub fn from_f64(name: &str, data: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            data: data.iter().map(|&v| v as f32).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub columns: Vec<Column>,
    pub meta: DatasetMeta,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<()> {
        let want = self.meta.dims.len();
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        if names != self.meta.columns.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::invalid(format!(
                "columns {names:?} do not match metadata {:?}",
                self.meta.columns
            )));
        }
        for c in &self.columns {
            if c.data.len() != want {
                return Err(Error::invalid(format!(
                    "column {} has {} values, dims need {want}",
                    c.name,
                    c.data.len()
                )));
            }
        }
        if self.meta.sample_indices.len() != self.meta.dims.n || self.meta.noise_seeds.len() != self.meta.dims.n {
            return Err(Error::invalid("one sample index and seed per row required"));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// A column as an `(N, T, X[, Y])` tensor.
    pub fn tensor(&self, name: &str) -> Result<ArrayD<f32>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::invalid(format!("no column {name}")))?;
        reshape(&c.data, &self.meta.dims)
    }
}

/// Copies one sample's `[T, points]` block into a column buffer.
pub fn append_sample(buf: &mut Vec<f32>, block: &Array2<f64>) {
    buf.extend(block.iter().map(|&v| v as f32));
}

/// Repeats a single field `t` times along the time axis.
pub fn broadcast_time(field: &[f64], t: usize) -> Array2<f64> {
    let mut out = Array2::zeros((t, field.len()));
    for mut row in out.rows_mut() {
        row.assign(&ndarray::ArrayView1::from(field));
    }
    out
}

/// Repeats one scalar per time slice across `points`.
pub fn broadcast_space(series: &[f64], points: usize) -> Array2<f64> {
    Array2::from_shape_fn((series.len(), points), |(t, _)| series[t])
}

/// Row positions of a 70/15/15 train/valid/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_rows(n: usize, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 70 / 100;
    let n_valid = n * 15 / 100;
    let test = idx.split_off(n_train + n_valid);
    let valid = idx.split_off(n_train);
    Split {
        train: idx,
        valid,
        test,
    }
}

/// `[T, points]` slice of the spatial subsample of a trajectory block.
pub fn subsample_block(values: &Array2<f64>, grid: &Grid, space_stride: usize) -> Array2<f64> {
    if space_stride == 1 {
        return values.clone();
    }
    let rows: Vec<Vec<f64>> = values
        .rows()
        .into_iter()
        .map(|r| subsample_row(r.to_vec().as_slice(), grid, space_stride))
        .collect();
    let m = rows.first().map_or(0, Vec::len);
    Array2::from_shape_vec((rows.len(), m), rows.concat()).expect("uniform rows")
}

/// Keeps every `stride`-th row.
pub fn stride_rows(values: &Array2<f64>, stride: usize) -> Array2<f64> {
    values.slice(s![..;stride, ..]).to_owned()
}
