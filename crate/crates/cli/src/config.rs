//! TOML run configuration with `extends` inheritance.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spde_core::dataset::Task;
use spde_core::noise::BasisSpec;
use spde_core::renorm::RenormOptions;
use spde_core::rng::{hash_words, hash_str};
use spde_core::solvers::presets::{Method, Preset};
use spde_core::solvers::{check_stability, EquationKind};
use spde_core::EquationConfig;
use toml::{Table, Value};

use crate::Failure;

/// Default output directory when neither the config nor the command line
/// names one.
pub const OUTPUT_DIR_ENV: &str = "SPDE_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    #[serde(default = "default_task")]
    pub task: Task,
    /// Truncation degrees; the preset's grid when empty.
    #[serde(default)]
    pub j: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Seed of the train/valid/test split; derived from the master seed
    /// when absent.
    #[serde(default)]
    pub split_seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Samples per Parquet row group.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Size of the random perturbation of the initial data. Defaults to 0
    /// for the `xi` task and 0.1 for `u0-xi`.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Partial [`EquationConfig`] merged over the preset. Basis truncation
    /// degrees are always taken from `j`.
    #[serde(default)]
    pub equation: Option<Table>,
    #[serde(default)]
    pub renorm: RenormOptions,
}

fn default_task() -> Task {
    Task::Xi
}

fn default_samples() -> usize {
    spde_core::solvers::presets::SAMPLES_PER_DEGREE
}

fn default_batch() -> usize {
    32
}

impl RunConfig {
    pub fn new(preset: Preset) -> Self {
        Self {
            preset,
            task: default_task(),
            j: Vec::new(),
            samples: default_samples(),
            master_seed: 0,
            split_seed: None,
            output_dir: None,
            workers: None,
            batch_size: default_batch(),
            sigma: None,
            kappa: None,
            equation: None,
            renorm: RenormOptions::default(),
        }
    }

    /// Reads a config file, resolving `extends` chains relative to each
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let table = load_table(path, &mut HashSet::new())?;
        Value::Table(table)
            .try_into()
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let table: Table = text.parse().map_err(|e| Failure::Config(format!("{e}")))?;
        if table.contains_key("extends") {
            return Err(Failure::Config("`extends` needs a file path context; use RunConfig::load".into()));
        }
        Value::Table(table)
            .try_into()
            .map_err(|e| Failure::Config(format!("{e}")))
    }

    pub fn degrees(&self) -> Vec<usize> {
        if self.j.is_empty() {
            self.preset.j_grid().to_vec()
        } else {
            self.j.clone()
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(match self.task {
            Task::Xi => 0.0,
            Task::U0Xi => 0.1,
        })
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
            .unwrap_or_else(|| hash_words(&[self.master_seed, hash_str("split")]))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Equation configuration at truncation degree `j`, with overrides
    /// applied and validated.
    pub fn equation_config(&self, j: usize) -> Result<EquationConfig, Failure> {
        let base = self.preset.config(j).map_err(|e| Failure::Config(e.to_string()))?;
        let mut cfg = match &self.equation {
            None => base,
            Some(over) => {
                let mut value = Value::try_from(base).map_err(|e| Failure::Config(e.to_string()))?;
                merge(&mut value, Value::Table(over.clone()));
                let mut cfg: EquationConfig = value
                    .try_into()
                    .map_err(|e| Failure::Config(format!("equation overrides: {e}")))?;
                cfg.noise.basis = with_degree(cfg.noise.basis, j);
                cfg
            }
        };
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
        if cfg.kind() == EquationKind::Phi42 && self.renorm.scheme == spde_core::renorm::ShiftScheme::Explicit {
            check_stability(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.samples == 0 {
            return Err(Failure::Config("samples must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Failure::Config("batch_size must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Failure::Config("workers must be at least 1".into()));
        }
        let kappa = self.kappa();
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Failure::Config("kappa must be nonnegative".into()));
        }
        if self.task == Task::U0Xi && kappa == 0.0 && equation_kind(self.preset) != EquationKind::NseVorticity {
            return Err(Failure::Config("the u0-xi task needs kappa > 0".into()));
        }
        if !(self.renorm.divergence_bound > 0.0) {
            return Err(Failure::Config("renorm.divergence_bound must be positive".into()));
        }
        let degrees = self.degrees();
        let mut seen = HashSet::new();
        for &j in &degrees {
            if !seen.insert(j) {
                return Err(Failure::Config(format!("truncation degree {j} listed twice")));
            }
            self.equation_config(j)?;
        }
        Ok(())
    }

    pub fn method(&self) -> Option<Method> {
        self.preset.method()
    }
}

/// Name stem used in dataset file names.
pub fn name_stem(preset: Preset) -> &'static str {
    match preset {
        Preset::GinzburgLandau01 => "Phi41_01",
        Preset::GinzburgLandau1 => "Phi41_1",
        Preset::KdvCyl => "KdV_cyl",
        Preset::KdvQ => "KdV_Q",
        Preset::Wave => "Wave",
        Preset::NseVorticity => "NS",
        Preset::Phi42Explicit | Preset::Phi42Renormalized => "Phi42+",
    }
}

pub fn equation_kind(preset: Preset) -> EquationKind {
    match preset {
        Preset::GinzburgLandau01 | Preset::GinzburgLandau1 => EquationKind::GinzburgLandau,
        Preset::KdvCyl | Preset::KdvQ => EquationKind::Kdv,
        Preset::Wave => EquationKind::Wave,
        Preset::NseVorticity => EquationKind::NseVorticity,
        Preset::Phi42Explicit | Preset::Phi42Renormalized => EquationKind::Phi42,
    }
}

fn with_degree(basis: BasisSpec, j: usize) -> BasisSpec {
    match basis {
        BasisSpec::Sine1D { length, .. } => BasisSpec::Sine1D { length, modes: j },
        BasisSpec::Sine2D { lx, ly, .. } => BasisSpec::Sine2D { lx, ly, jx: j, jy: j },
        BasisSpec::ComplexExp2D { lx, ly, .. } => BasisSpec::ComplexExp2D { lx, ly, jx: j, jy: j },
    }
}

fn load_table(path: &Path, seen: &mut HashSet<PathBuf>) -> Result<Table, Failure> {
    let canonical = path
        .canonicalize()
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if !seen.insert(canonical.clone()) {
        return Err(Failure::Config(format!("`extends` cycle through {}", path.display())));
    }
    let text = std::fs::read_to_string(&canonical)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut table: Table = text
        .parse()
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let Some(parent) = table.remove("extends") else {
        return Ok(table);
    };
    let Value::String(parent) = parent else {
        return Err(Failure::Config(format!("{}: `extends` must be a path", path.display())));
    };
    let dir = canonical.parent().unwrap_or(Path::new("."));
    let mut base = Value::Table(load_table(&dir.join(parent), seen)?);
    merge(&mut base, Value::Table(table));
    match base {
        Value::Table(t) => Ok(t),
        _ => unreachable!(),
    }
}

/// Deep merge; tables merge key by key, anything else is replaced.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_preset_defaults() {
        let c = RunConfig::parse("preset = \"kdv-q\"").unwrap();
        assert_eq!(c.degrees(), vec![32, 64, 128, 256]);
        assert_eq!(c.samples, 1200);
        assert_eq!(c.kappa(), 0.0);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_merge_into_the_preset() {
        let c = RunConfig::parse(
            "preset = \"wave\"\nj = [8]\nsigma = 0.5\n[equation]\nn_t = 200\n[equation.physics]\nsource = 0.0\n",
        )
        .unwrap();
        let cfg = c.equation_config(8).unwrap();
        assert_eq!(cfg.n_t, 200);
        assert_eq!(cfg.sigma, 0.5);
        assert_eq!(cfg.physics, spde_core::solvers::Physics::Wave { source: 0.0 });
        assert_eq!(cfg.noise.basis.degrees(), (8, 1));
    }

    #[test]
    fn unstable_phi42_is_rejected() {
        let c = RunConfig::parse("preset = \"phi42-explicit\"\nj = [2]\n[equation]\nn_t = 20\n").unwrap();
        assert!(matches!(c.validate(), Err(Failure::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("preset = \"wave\"\nsamples_count = 3").is_err());
    }

    #[test]
    fn extends_chain() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.toml"), "preset = \"wave\"\nsamples = 7\nj = [16]\n").unwrap();
        std::fs::write(dir.path().join("child.toml"), "extends = \"base.toml\"\nsamples = 3\n").unwrap();
        let c = RunConfig::load(&dir.path().join("child.toml")).unwrap();
        assert_eq!((c.samples, c.j.clone(), c.preset), (3, vec![16], Preset::Wave));

        std::fs::write(dir.path().join("a.toml"), "extends = \"b.toml\"\n").unwrap();
        std::fs::write(dir.path().join("b.toml"), "extends = \"a.toml\"\n").unwrap();
        assert!(RunConfig::load(&dir.path().join("a.toml")).is_err());
    }
}
