use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use spde_core::dataset::{read_parquet, Task};
use spde_core::solvers::presets::Preset;
use spdegen::bench::{bench, BenchOptions};
use spdegen::compare::{compare_phi42, compare_records, CompareOptions};
use spdegen::config::OUTPUT_DIR_ENV;
use spdegen::generate::{generate, GenerateOptions};
use spdegen::report::write_json;
use spdegen::validate::{validate, ValidateOptions};
use spdegen::{Failure, RunConfig};

#[derive(Parser)]
#[command(name = "spdegen", version, about = "Stochastic PDE dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write one Parquet file per truncation degree.
    Generate {
        #[command(flatten)]
        run: RunArgs,
        /// Continue an interrupted run from its manifest.
        #[arg(long)]
        resume: bool,
        /// Leave the generation time out of the metadata.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Run the statistical and closed-form checks for a configuration.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 10_000)]
        wick_draws: usize,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Renormalised vs. explicit Φ⁴₂ sample means on coupled seeds.
    ComparePhi42 {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 128)]
        degree: usize,
        #[arg(long, default_value_t = 1200)]
        pairs: usize,
        /// Saved time index; the last one by default.
        #[arg(long)]
        t_index: Option<usize>,
        #[arg(long, default_value_t = 8.0)]
        k_cut: f64,
        /// Compare two generated files instead of solving.
        #[arg(long, num_args = 2, value_names = ["RENO", "EXPL"])]
        files: Option<Vec<PathBuf>>,
        /// Directory for the report and plot data.
        #[arg(long, default_value = "compare-phi42")]
        out: PathBuf,
    },
    /// Time one sample of each preset on a single thread.
    Bench {
        /// Presets to time; all when omitted.
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Also time explicit Φ⁴₂ with twice the time points.
        #[arg(long)]
        nt_scaling: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the metadata and dims of a dataset file.
    Inspect {
        file: PathBuf,
        /// Print the full metadata as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// `xi` or `u0-xi`.
    #[arg(long)]
    task: Option<String>,
    /// Truncation degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    j: Vec<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, short, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut run = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(p)) => RunConfig::new(Preset::from_name(p).map_err(|e| Failure::Config(e.to_string()))?),
            (None, None) => return Err(Failure::Config("give --config or --preset".into())),
        };
        if let (Some(_), Some(p)) = (&self.config, &self.preset) {
            run.preset = Preset::from_name(p).map_err(|e| Failure::Config(e.to_string()))?;
        }
        if let Some(t) = &self.task {
            run.task = match t.as_str() {
                "xi" => Task::Xi,
                "u0-xi" | "u0_xi" => Task::U0Xi,
                other => return Err(Failure::Config(format!("unknown task {other:?}"))),
            };
        }
        if !self.j.is_empty() {
            run.j = self.j.clone();
        }
        macro_rules! set {
            ($($field:ident <- $value:expr),*) => {$(if let Some(v) = $value { run.$field = v; })*};
        }
        set!(samples <- self.samples, master_seed <- self.seed, batch_size <- self.batch_size);
        set!(split_seed <- self.split_seed.map(Some), output_dir <- self.output_dir.clone().map(Some));
        set!(workers <- self.workers.map(Some), sigma <- self.sigma.map(Some), kappa <- self.kappa.map(Some));
        Ok(run)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            run,
            resume,
            no_timestamp,
        } => {
            let run = run.resolve()?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
                .map_err(|e| Failure::Other(e.to_string()))?;
            let progress = |done: usize, total: usize| eprintln!("  {done}/{total} samples");
            let opts = GenerateOptions {
                interrupt: Some(&stop),
                resume,
                timestamp: !no_timestamp,
                progress: Some(&progress),
            };
            for o in generate(&run, &opts)? {
                let state = if o.interrupted { "interrupted" } else { "done" };
                println!(
                    "J={:<4} {:>6} rows {:>4} failed  {state}  {}",
                    o.j,
                    o.rows,
                    o.failures.len(),
                    o.path.display()
                );
            }
            Ok(())
        }
        Command::Validate {
            run,
            paths,
            wick_draws,
            report,
        } => {
            let run = run.resolve()?;
            let r = validate(&run, &ValidateOptions { paths, wick_draws })?;
            println!("{}", r.table());
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
            if r.passed {
                Ok(())
            } else {
                let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Validation(failed.join(", ")))
            }
        }
        Command::ComparePhi42 {
            run,
            degree,
            pairs,
            t_index,
            k_cut,
            files,
            out,
        } => {
            let (report, fields) = match files {
                Some(f) => compare_records(&read_parquet(&f[0])?, &read_parquet(&f[1])?, t_index, k_cut)?,
                None => {
                    let mut base = if run.config.is_none() && run.preset.is_none() {
                        RunConfig::new(Preset::Phi42Renormalized)
                    } else {
                        run.resolve()?
                    };
                    base.j = vec![degree];
                    let opts = CompareOptions {
                        j: degree,
                        samples: pairs,
                        t_index,
                        k_cut,
                    };
                    compare_phi42(&base, &opts)?
                }
            };
            println!("{}", report.table());
            write_json(&out.join("report.json"), &report)?;
            fields.write(&out)?;
            println!("plot data in {}", out.display());
            Ok(())
        }
        Command::Bench {
            presets,
            degree,
            warmup,
            repeats,
            nt_scaling,
            report,
        } => {
            let presets = if presets.is_empty() {
                Preset::ALL.to_vec()
            } else {
                presets
                    .iter()
                    .map(|p| Preset::from_name(p))
                    .collect::<Result<_, _>>()
                    .map_err(|e| Failure::Config(e.to_string()))?
            };
            let opts = BenchOptions {
                presets,
                j: degree,
                warmup,
                repeats,
                nt_scaling,
            };
            let r = bench(&RunConfig::new(Preset::Wave), &opts)?;
            println!("{}", r.table());
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
            Ok(())
        }
        Command::Inspect { file, json } => {
            let rec = read_parquet(&file)?;
            let m = &rec.meta;
            if json {
                println!("{}", serde_json::to_string_pretty(m).map_err(|e| Failure::Other(e.to_string()))?);
                return Ok(());
            }
            println!("file      {}", file.display());
            println!("preset    {} ({})", m.preset, m.equation.name());
            println!("task      {}", m.task.tag());
            if let Some(method) = m.method {
                println!("method    {}", method.tag());
            }
            println!("J         {}", m.j);
            println!("sigma     {}  kappa {}", m.sigma, m.kappa);
            println!("dims      {:?} (N, T, X[, Y])", m.dims.shape());
            println!("rows      {} of {} requested, {} failed", m.dims.n, m.requested, m.failures.len());
            println!("columns   {}", m.columns.join(", "));
            println!("seeds     master {}  split {}", m.master_seed, m.split_seed);
            println!("scheme    {}", m.scheme_version);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
