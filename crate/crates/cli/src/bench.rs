//! Per-sample wall time of the solvers on one thread.

use serde::{Deserialize, Serialize};
use spde_core::metrics::{time_solver, Timing};
use spde_core::solvers::presets::Preset;

use crate::config::RunConfig;
use crate::plan::Plan;
use crate::report::table;
use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchOptions {
    pub presets: Vec<Preset>,
    /// Truncation degree; each preset's largest when absent.
    pub j: Option<usize>,
    pub warmup: usize,
    pub repeats: usize,
    /// Also time explicit Φ⁴₂ with twice the time points.
    pub nt_scaling: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            presets: Preset::ALL.to_vec(),
            j: None,
            warmup: 1,
            repeats: 5,
            nt_scaling: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub preset: String,
    pub j: usize,
    pub n_t: usize,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NtScaling {
    pub base: BenchRow,
    pub doubled: BenchRow,
    /// Doubled over base mean time; linear work gives 2.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt_scaling: Option<NtScaling>,
}

impl BenchReport {
    pub fn table(&self) -> String {
        let ms = |v: f64| format!("{:.3}", v * 1e3);
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.preset.clone(),
                    r.j.to_string(),
                    r.n_t.to_string(),
                    ms(r.timing.mean),
                    ms(r.timing.median),
                    r.timing.std.map(ms).unwrap_or_else(|| "-".into()),
                    r.timing.samples.len().to_string(),
                ]
            })
            .collect();
        if let Some(s) = &self.nt_scaling {
            rows.push(vec![
                format!("{} (n_t x2)", s.doubled.preset),
                s.doubled.j.to_string(),
                s.doubled.n_t.to_string(),
                ms(s.doubled.timing.mean),
                ms(s.doubled.timing.median),
                s.doubled.timing.std.map(ms).unwrap_or_else(|| "-".into()),
                format!("ratio {:.2}", s.ratio),
            ]);
        }
        table(&["preset", "J", "n_t", "mean ms", "median ms", "std ms", "repeats"], rows)
    }

    pub fn mean_of(&self, preset: Preset) -> Option<f64> {
        self.rows.iter().find(|r| r.preset == preset.name()).map(|r| r.timing.mean)
    }
}

fn time_plan(plan: &Plan, opts: &BenchOptions) -> Result<BenchRow, Failure> {
    let timing = time_solver(|i| plan.solve(i as u64).map(|s| s.u.values.len()), opts.warmup, opts.repeats)?;
    Ok(BenchRow {
        preset: plan.preset.name().to_string(),
        j: plan.j,
        n_t: plan.cfg.n_t,
        timing,
    })
}

/// Times noise sampling, initial data and one solve per repeat; the
/// renormalisation constant is built once per plan and not timed.
pub fn bench(base: &RunConfig, opts: &BenchOptions) -> Result<BenchReport, Failure> {
    if opts.repeats == 0 {
        return Err(Failure::Config("bench needs at least one repeat".into()));
    }
    let mut rows = Vec::new();
    for &p in &opts.presets {
        let mut run = base.clone();
        run.preset = p;
        run.j.clear();
        let j = opts.j.unwrap_or_else(|| *p.j_grid().iter().max().expect("nonempty grid"));
        rows.push(time_plan(&Plan::new(&run, j)?, opts)?);
    }
    let nt_scaling = if opts.nt_scaling {
        let mut run = base.clone();
        run.preset = Preset::Phi42Explicit;
        let j = opts.j.unwrap_or(128);
        let plan = Plan::new(&run, j)?;
        let base_row = time_plan(&plan, opts)?;
        let mut doubled = plan;
        doubled.cfg.n_t = 2 * doubled.cfg.n_t - 1;
        let doubled_row = time_plan(&doubled, opts)?;
        let ratio = doubled_row.timing.mean / base_row.timing.mean;
        Some(NtScaling {
            base: base_row,
            doubled: doubled_row,
            ratio,
        })
    } else {
        None
    };
    Ok(BenchReport { rows, nt_scaling })
}
