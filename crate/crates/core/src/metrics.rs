//! Error norms, spectral diagnostics and solver timing.

use std::time::Instant;

use ndarray::ArrayView2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{wavenumber, Fft2};

/// Which saved slices enter the relative error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    /// Every saved time step.
    #[default]
    AllSteps,
    FinalTime,
}

/// `||pred - truth||_2 / ||truth||_2` with plain root-sum-square norms.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "relative L2 needs equal lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let norm: f64 = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::UndefinedMetric(
            "relative L2 against a zero reference".into(),
        ));
    }
    let diff: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Relative error between two `[time, space]` trajectories.
pub fn relative_l2_trajectory(pred: ArrayView2<f64>, truth: ArrayView2<f64>, mode: ErrorMode) -> Result<f64> {
    if pred.dim() != truth.dim() {
        return Err(Error::invalid(format!(
            "trajectory shapes differ: {:?} vs {:?}",
            pred.dim(),
            truth.dim()
        )));
    }
    if pred.nrows() == 0 {
        return Err(Error::UndefinedMetric("empty trajectory".into()));
    }
    match mode {
        ErrorMode::AllSteps => {
            let p = pred.as_standard_layout();
            let t = truth.as_standard_layout();
            relative_l2(p.as_slice().expect("standard"), t.as_slice().expect("standard"))
        }
        ErrorMode::FinalTime => {
            let last = pred.nrows() - 1;
            let p = pred.row(last).to_vec();
            let t = truth.row(last).to_vec();
            relative_l2(&p, &t)
        }
    }
}

/// Fraction of the non-mean spectral energy of an `nx x ny` periodic field
/// (x-major) at integer wavenumber magnitude `|k| > k_cut`. A field with no
/// non-mean energy gives 0.
pub fn high_freq_energy_fraction(field: &[f64], nx: usize, ny: usize, k_cut: f64) -> Result<f64> {
    if field.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::invalid(format!(
            "field of length {} is not {nx}x{ny}",
            field.len()
        )));
    }
    let fft = Fft2::new(nx, ny);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let (mut total, mut high) = (0.0, 0.0);
    for a in 0..nx {
        let kx = wavenumber(a, nx) as f64;
        for b in 0..ny {
            if a == 0 && b == 0 {
                continue;
            }
            let ky = wavenumber(b, ny) as f64;
            let e = buf[a * ny + b].norm_sqr();
            total += e;
            if (kx * kx + ky * ky).sqrt() > k_cut {
                high += e;
            }
        }
    }
    // relative threshold so roundoff in a constant field reads as zero
    let scale: f64 = field.iter().map(|v| v * v).sum::<f64>() * (nx * ny) as f64;
    if total <= 1e-24 * scale || total == 0.0 {
        return Ok(0.0);
    }
    Ok(high / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; absent for a single value.
    pub std: Option<f64>,
    pub count: usize,
}

impl ErrorReport {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::UndefinedMetric("no samples".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("errors must be nonnegative"));
        }
        let (mean, std) = mean_std(&values);
        Ok(Self {
            count: values.len(),
            values,
            mean,
            std,
        })
    }
}

fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (mean, std)
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let (mean, std) = mean_std(values);
    (mean, std.unwrap_or(0.0) / (values.len() as f64).sqrt())
}

/// Sample variance and its standard error (normal-theory approximation
/// `var * sqrt(2 / (n - 1))` replaced by the fourth-moment estimate).
pub fn variance_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let dev2: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = dev2.iter().sum::<f64>() / (n - 1.0);
    let (_, se) = mean_stderr(&dev2);
    (var, se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds per run.
    pub samples: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub std: Option<f64>,
    pub warmup: usize,
}

/// Times `repeats` calls of `run` after `warmup` untimed calls.
pub fn time_solver<F, T>(mut run: F, warmup: usize, repeats: usize) -> Result<Timing>
where
    F: FnMut(usize) -> Result<T>,
{
    if repeats == 0 {
        return Err(Error::invalid("timing needs at least one repeat"));
    }
    for i in 0..warmup {
        std::hint::black_box(run(i)?);
    }
    let mut samples = Vec::with_capacity(repeats);
    for i in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(run(warmup + i)?);
        samples.push(start.elapsed().as_secs_f64());
    }
    let (mean, std) = mean_std(&samples);
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Ok(Timing {
        samples,
        mean,
        median,
        std,
        warmup,
    })
}
