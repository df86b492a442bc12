//! Renormalised vs. explicit Φ⁴₂ on coupled noise and initial data.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spde_core::dataset::{DatasetRecord, FailedSample};
use spde_core::initcond::make_initial;
use spde_core::metrics::{high_freq_energy_fraction, relative_l2, ErrorReport};
use spde_core::renorm::solve_phi42_renormalized;
use spde_core::solvers::presets::Preset;
use spde_core::solvers::solve_phi42_explicit;
use spde_core::Grid;

use crate::config::RunConfig;
use crate::plan::Plan;
use crate::report::{sci, table};
use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareOptions {
    pub j: usize,
    pub samples: usize,
    /// Saved time index; the last one when absent.
    pub t_index: Option<usize>,
    pub k_cut: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            j: 128,
            samples: 1200,
            t_index: None,
            k_cut: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub j: usize,
    pub samples: usize,
    pub t_index: usize,
    pub time: f64,
    pub k_cut: f64,
    pub hf_fraction_reno: f64,
    pub hf_fraction_expl: f64,
    /// Relative L² of the explicit mean field against the renormalised one.
    pub mean_field_rel_l2: f64,
    /// Per-sample relative L² of explicit against renormalised.
    pub paired: ErrorReport,
    pub failures: Vec<FailedSample>,
}

impl CompareReport {
    pub fn table(&self) -> String {
        let std = self.paired.std.map(sci).unwrap_or_else(|| "-".into());
        table(
            &["J", "samples", "t", "HF reno", "HF expl", "mean-field rel L2", "paired rel L2 (mean ± std)"],
            vec![vec![
                self.j.to_string(),
                self.samples.to_string(),
                format!("{:.6}", self.time),
                sci(self.hf_fraction_reno),
                sci(self.hf_fraction_expl),
                sci(self.mean_field_rel_l2),
                format!("{} ± {std}", sci(self.paired.mean)),
            ]],
        )
    }
}

/// Sample-mean fields at the compared time, `nx * ny` values each in grid
/// storage order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFields {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub reno: Vec<f64>,
    pub expl: Vec<f64>,
}

impl MeanFields {
    /// Writes `fields.csv` (`x,y,reno,expl`) and `fields.json`.
    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
        let csv = dir.join("fields.csv");
        let mut f = std::io::BufWriter::new(
            std::fs::File::create(&csv).map_err(|e| Failure::Other(format!("{}: {e}", csv.display())))?,
        );
        let io = |e: std::io::Error| Failure::Other(format!("{}: {e}", csv.display()));
        writeln!(f, "x,y,reno,expl").map_err(io)?;
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                let m = ix * self.ny + iy;
                writeln!(f, "{},{},{},{}", self.x[ix], self.y[iy], self.reno[m], self.expl[m]).map_err(io)?;
            }
        }
        f.flush().map_err(io)?;
        crate::report::write_json(&dir.join("fields.json"), self)
    }
}

/// Per-sample fields of the two methods at one time, row `i` of each
/// belonging to the same seed.
pub fn compare_fields(
    reno: &[Vec<f64>],
    expl: &[Vec<f64>],
    grid: &Grid,
    k_cut: f64,
) -> Result<(f64, f64, f64, ErrorReport, Vec<f64>, Vec<f64>), Failure> {
    if reno.len() != expl.len() || reno.is_empty() {
        return Err(Failure::Config(format!(
            "need the same nonzero number of samples, got {} and {}",
            reno.len(),
            expl.len()
        )));
    }
    let dims = grid.dims();
    let (nx, ny) = (dims[0], dims[1]);
    let mean = |set: &[Vec<f64>]| -> Vec<f64> {
        let mut m = vec![0.0; nx * ny];
        for s in set {
            m.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        m.iter_mut().for_each(|a| *a /= set.len() as f64);
        m
    };
    let (mr, me) = (mean(reno), mean(expl));
    let hf_r = high_freq_energy_fraction(&mr, nx, ny, k_cut)?;
    let hf_e = high_freq_energy_fraction(&me, nx, ny, k_cut)?;
    let mean_err = relative_l2(&me, &mr)?;
    let paired = reno
        .iter()
        .zip(expl)
        .map(|(r, e)| relative_l2(e, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((hf_r, hf_e, mean_err, ErrorReport::from_values(paired)?, mr, me))
}

/// Generates `samples` coupled pairs in memory and compares them.
pub fn compare_phi42(base: &RunConfig, opts: &CompareOptions) -> Result<(CompareReport, MeanFields), Failure> {
    if opts.samples == 0 {
        return Err(Failure::Config("need at least one sample".into()));
    }
    let mut reno_run = base.clone();
    reno_run.preset = Preset::Phi42Renormalized;
    let mut expl_run = base.clone();
    expl_run.preset = Preset::Phi42Explicit;
    expl_run.validate()?;
    let reno = Plan::new(&reno_run, opts.j)?;
    let expl = Plan::new(&expl_run, opts.j)?;
    if reno.cfg != expl.cfg {
        return Err(Failure::Config("the two methods resolve to different setups".into()));
    }
    let t = opts.t_index.unwrap_or(reno.cfg.n_saved() - 1);
    if t >= reno.cfg.n_saved() {
        return Err(Failure::Config(format!("time index {t} out of range")));
    }
    let constant = reno.constant.as_ref().expect("renormalised plan");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(base.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let pairs: Vec<Result<(Vec<f64>, Vec<f64>), FailedSample>> = pool.install(|| {
        (0..opts.samples as u64)
            .into_par_iter()
            .map(|i| -> Result<Result<_, FailedSample>, Failure> {
                // one draw, shared by both methods
                let noise = reno.noise(i)?;
                let init = make_initial(&reno.initial_spec(i), &reno.cfg.grid)?;
                let r = solve_phi42_renormalized(&init.u0, &noise, &reno.cfg, constant, &reno.renorm);
                let e = solve_phi42_explicit(&init.u0, &noise, &expl.cfg);
                match (r, e) {
                    (Ok(r), Ok(e)) => Ok(Ok((r.u.slice(t).to_vec(), e.slice(t).to_vec()))),
                    (Err(err @ spde_core::Error::Divergence { .. }), _)
                    | (_, Err(err @ spde_core::Error::Divergence { .. })) => Ok(Err(FailedSample {
                        index: i,
                        seed: reno.noise_seed(i),
                        reason: err.to_string(),
                    })),
                    (Err(err), _) | (_, Err(err)) => Err(err.into()),
                }
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    let mut failures = Vec::new();
    let (mut rs, mut es) = (Vec::new(), Vec::new());
    for p in pairs {
        match p {
            Ok((r, e)) => {
                rs.push(r);
                es.push(e);
            }
            Err(f) => failures.push(f),
        }
    }
    if rs.is_empty() {
        return Err(Failure::Divergence("every coupled pair diverged".into()));
    }
    let grid = reno.cfg.grid;
    let (hf_r, hf_e, mean_err, paired, mr, me) = compare_fields(&rs, &es, &grid, opts.k_cut)?;
    let report = CompareReport {
        j: opts.j,
        samples: rs.len(),
        t_index: t,
        time: reno.cfg.saved_times()[t],
        k_cut: opts.k_cut,
        hf_fraction_reno: hf_r,
        hf_fraction_expl: hf_e,
        mean_field_rel_l2: mean_err,
        paired,
        failures,
    };
    let dims = grid.dims();
    Ok((
        report,
        MeanFields {
            nx: dims[0],
            ny: dims[1],
            x: grid.axis_x(),
            y: grid.axis_y(),
            reno: mr,
            expl: me,
        },
    ))
}

/// Compares two generated Φ⁴₂ files. They must share `J`, sample indices
/// and noise seeds.
pub fn compare_records(
    reno: &DatasetRecord,
    expl: &DatasetRecord,
    t_index: Option<usize>,
    k_cut: f64,
) -> Result<(CompareReport, MeanFields), Failure> {
    let (a, b) = (&reno.meta, &expl.meta);
    if a.j != b.j {
        return Err(Failure::Config(format!("truncation degrees differ: {} vs {}", a.j, b.j)));
    }
    if a.sample_indices != b.sample_indices || a.noise_seeds != b.noise_seeds {
        return Err(Failure::Config("the files were not generated from the same seeds".into()));
    }
    if a.dims != b.dims || a.dims.y.is_none() {
        return Err(Failure::Config("both files must hold 2D fields of equal dims".into()));
    }
    let d = a.dims;
    let t = t_index.unwrap_or(d.t - 1);
    if t >= d.t {
        return Err(Failure::Config(format!("time index {t} out of range")));
    }
    let ny = d.y.expect("checked");
    let pts = d.x * ny;
    let slices = |rec: &DatasetRecord| -> Result<Vec<Vec<f64>>, Failure> {
        let u = rec
            .column("u")
            .ok_or_else(|| Failure::Config("file has no u column".into()))?;
        Ok((0..d.n)
            .map(|n| {
                let off = n * d.per_sample() + t * pts;
                u.data[off..off + pts].iter().map(|&v| v as f64).collect()
            })
            .collect())
    };
    let (rs, es) = (slices(reno)?, slices(expl)?);
    let grid = a.config.grid.subsample(a.config.space_stride)?;
    let (hf_r, hf_e, mean_err, paired, mr, me) = compare_fields(&rs, &es, &grid, k_cut)?;
    Ok((
        CompareReport {
            j: a.j,
            samples: d.n,
            t_index: t,
            time: a.times[t],
            k_cut,
            hf_fraction_reno: hf_r,
            hf_fraction_expl: hf_e,
            mean_field_rel_l2: mean_err,
            paired,
            failures: Vec::new(),
        },
        MeanFields {
            nx: d.x,
            ny,
            x: grid.axis_x(),
            y: grid.axis_y(),
            reno: mr,
            expl: me,
        },
    ))
}
