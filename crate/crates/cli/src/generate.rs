//! Dataset generation: one Parquet file per truncation degree.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spde_core::dataset::{
    append_sample, file_name, read_parquet, sidecar_path, DatasetMeta, DatasetWriter, FailedSample, SCHEME_VERSION,
};

use crate::config::RunConfig;
use crate::plan::Plan;
use crate::Failure;

#[derive(Default)]
pub struct GenerateOptions<'a> {
    /// Checked between batches; when set, completed samples are flushed to
    /// a `.partial.parquet` file next to a resumable manifest.
    pub interrupt: Option<&'a AtomicBool>,
    /// Continue from a manifest left by an interrupted run.
    pub resume: bool,
    /// Record the wall-clock time in the metadata.
    pub timestamp: bool,
    /// Called after each written batch with `(done, requested)`.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateOutcome {
    pub path: PathBuf,
    pub j: usize,
    pub rows: usize,
    pub failures: Vec<FailedSample>,
    pub interrupted: bool,
}

/// Left next to a partial file; `--resume` continues from `next_sample`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub j: usize,
    pub file: PathBuf,
    pub partial: PathBuf,
    pub next_sample: u64,
}

pub fn manifest_path(final_path: &Path) -> PathBuf {
    final_path.with_extension("manifest.json")
}

pub fn partial_path(final_path: &Path) -> PathBuf {
    final_path.with_extension("partial.parquet")
}

/// Generates every configured truncation degree. Returns early, without
/// error, if interrupted.
pub fn generate(run: &RunConfig, opts: &GenerateOptions) -> Result<Vec<GenerateOutcome>, Failure> {
    run.validate()?;
    let dir = run.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let mut outcomes = Vec::new();
    for j in run.degrees() {
        let plan = Plan::new(run, j)?;
        let out = pool.install(|| generate_degree(run, &plan, &dir, opts))?;
        let stop = out.interrupted;
        outcomes.push(out);
        if stop {
            return Ok(outcomes);
        }
    }
    let dead: Vec<_> = outcomes.iter().filter(|o| o.rows == 0).collect();
    if let Some(o) = dead.first() {
        return Err(Failure::Divergence(format!(
            "every sample of {} diverged ({} failures)",
            o.path.display(),
            o.failures.len()
        )));
    }
    Ok(outcomes)
}

struct Produced {
    index: u64,
    seed: u64,
    columns: Result<Vec<Vec<f32>>, String>,
}

fn produce(plan: &Plan, index: u64) -> Result<Produced, Failure> {
    let seed = plan.noise_seed(index);
    let columns = match plan.solve(index).and_then(|s| plan.package(&s)) {
        Ok(blocks) => Ok(blocks
            .iter()
            .map(|b| {
                let mut v = Vec::with_capacity(b.len());
                append_sample(&mut v, b);
                v
            })
            .collect()),
        Err(e @ spde_core::Error::Divergence { .. }) => Err(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    Ok(Produced { index, seed, columns })
}

fn generate_degree(run: &RunConfig, plan: &Plan, dir: &Path, opts: &GenerateOptions) -> Result<GenerateOutcome, Failure> {
    let final_path = dir.join(file_name(plan.stem(), plan.kind(), plan.task, plan.method(), plan.j, run.samples));
    let partial = partial_path(&final_path);
    let manifest = manifest_path(&final_path);
    let columns = plan.columns();
    let per_sample = plan.dims(1).per_sample();

    let mut indices = Vec::new();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    let mut start = 0u64;

    let previous = if opts.resume && manifest.exists() {
        let m: Manifest = read_json(&manifest)?;
        if m.j != plan.j || m.config != *run {
            return Err(Failure::Config(format!(
                "{} was written for a different configuration",
                manifest.display()
            )));
        }
        let rec = read_parquet(&m.partial)?;
        start = m.next_sample;
        indices = rec.meta.sample_indices.clone();
        seeds = rec.meta.noise_seeds.clone();
        failures = rec.meta.failures.clone();
        Some(rec)
    } else {
        None
    };

    let scratch = partial.with_extension("tmp.parquet");
    let mut writer = DatasetWriter::create(&scratch, &columns, per_sample)?;
    if let Some(rec) = &previous {
        if rec.meta.dims.n > 0 {
            let data: Vec<&[f32]> = rec.columns.iter().map(|c| c.data.as_slice()).collect();
            writer.write_batch(&data)?;
        }
    }

    let batch = run.batch_size as u64;
    let total = run.samples as u64;
    let mut next = start;
    let mut interrupted = false;
    while next < total {
        if opts.interrupt.is_some_and(|f| f.load(Ordering::SeqCst)) {
            interrupted = true;
            break;
        }
        let end = (next + batch).min(total);
        let produced: Vec<Produced> = (next..end)
            .into_par_iter()
            .map(|i| produce(plan, i))
            .collect::<Result<_, _>>()?;
        let mut bufs: Vec<Vec<f32>> = vec![Vec::new(); columns.len()];
        for p in produced {
            match p.columns {
                Ok(cols) => {
                    for (b, c) in bufs.iter_mut().zip(cols) {
                        b.extend_from_slice(&c);
                    }
                    indices.push(p.index);
                    seeds.push(p.seed);
                }
                Err(reason) => failures.push(FailedSample {
                    index: p.index,
                    seed: p.seed,
                    reason,
                }),
            }
        }
        let data: Vec<&[f32]> = bufs.iter().map(Vec::as_slice).collect();
        writer.write_batch(&data)?;
        next = end;
        if let Some(cb) = opts.progress {
            cb(next as usize, total as usize);
        }
    }

    let meta = DatasetMeta {
        preset: plan.preset.name().to_string(),
        equation: plan.kind(),
        name_stem: plan.stem().to_string(),
        task: plan.task,
        method: plan.method(),
        j: plan.j,
        sigma: plan.cfg.sigma,
        kappa: plan.kappa,
        requested: run.samples,
        master_seed: run.master_seed,
        split_seed: run.split_seed(),
        dims: plan.dims(indices.len()),
        sample_indices: indices,
        noise_seeds: seeds,
        failures,
        columns,
        times: plan.saved_times(),
        config: plan.cfg,
        scheme_version: SCHEME_VERSION.to_string(),
        a_eps: plan
            .constant
            .as_ref()
            .map(|_| "pointwise a(t, x) used in the Wick powers, sampled like u".to_string()),
        generated_at: opts.timestamp.then(now),
    };
    let rows = meta.dims.n;
    let failures = meta.failures.clone();
    writer.finish(&meta)?;

    let (target, result_path) = if interrupted {
        (partial.clone(), partial.clone())
    } else {
        (final_path.clone(), final_path.clone())
    };
    rename(&scratch, &target)?;
    rename(&sidecar_path(&scratch), &sidecar_path(&target))?;
    if interrupted {
        let m = Manifest {
            config: run.clone(),
            j: plan.j,
            file: final_path,
            partial,
            next_sample: next,
        };
        write_json(&manifest, &m)?;
    } else {
        for stale in [partial.clone(), sidecar_path(&partial), manifest] {
            if stale.exists() {
                std::fs::remove_file(&stale).map_err(|e| Failure::Other(format!("{}: {e}", stale.display())))?;
            }
        }
    }
    Ok(GenerateOutcome {
        path: result_path,
        j: plan.j,
        rows,
        failures,
        interrupted,
    })
}

fn now() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn rename(from: &Path, to: &Path) -> Result<(), Failure> {
    std::fs::rename(from, to).map_err(|e| Failure::Other(format!("{} -> {}: {e}", from.display(), to.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}
