//! Named equation presets with their reference resolutions and coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::noise::{BasisSpec, NoiseSpec, SpectrumSpec};

use super::{EquationConfig, Physics};

/// Samples generated per (equation, truncation degree).
pub const SAMPLES_PER_DEGREE: usize = 1200;

pub const J_GRID_REGULAR: [usize; 4] = [32, 64, 128, 256];
pub const J_GRID_PHI42: [usize; 5] = [2, 8, 32, 64, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Ginzburg–Landau with sigma = 0.1
    #[serde(rename = "ginzburg-landau-01")]
    GinzburgLandau01,
    /// Ginzburg–Landau with sigma = 1
    #[serde(rename = "ginzburg-landau-1", alias = "ginzburg-landau")]
    GinzburgLandau1,
    #[serde(rename = "kdv-cyl", alias = "kdv")]
    KdvCyl,
    #[serde(rename = "kdv-q")]
    KdvQ,
    Wave,
    NseVorticity,
    Phi42Explicit,
    #[serde(rename = "phi42-renormalized", alias = "phi42-reno")]
    Phi42Renormalized,
}

/// How a Φ⁴₂ sample is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Expl,
    Reno,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Expl => "expl",
            Method::Reno => "reno",
        }
    }
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::GinzburgLandau01,
        Preset::GinzburgLandau1,
        Preset::KdvCyl,
        Preset::KdvQ,
        Preset::Wave,
        Preset::NseVorticity,
        Preset::Phi42Explicit,
        Preset::Phi42Renormalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::GinzburgLandau01 => "ginzburg-landau-01",
            Preset::GinzburgLandau1 => "ginzburg-landau-1",
            Preset::KdvCyl => "kdv-cyl",
            Preset::KdvQ => "kdv-q",
            Preset::Wave => "wave",
            Preset::NseVorticity => "nse-vorticity",
            Preset::Phi42Explicit => "phi42-explicit",
            Preset::Phi42Renormalized => "phi42-renormalized",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let aliases = [
            ("ginzburg-landau", Preset::GinzburgLandau1),
            ("kdv", Preset::KdvCyl),
            ("phi42-reno", Preset::Phi42Renormalized),
        ];
        Preset::ALL
            .iter()
            .map(|p| (p.name(), *p))
            .chain(aliases)
            .find(|(n, _)| *n == name)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::invalid(format!("unknown preset {name:?}")))
    }

    pub fn j_grid(self) -> &'static [usize] {
        match self {
            Preset::Phi42Explicit | Preset::Phi42Renormalized => &J_GRID_PHI42,
            _ => &J_GRID_REGULAR,
        }
    }

    pub fn method(self) -> Option<Method> {
        match self {
            Preset::Phi42Explicit => Some(Method::Expl),
            Preset::Phi42Renormalized => Some(Method::Reno),
            _ => None,
        }
    }

    /// Equation configuration at truncation degree `j`.
    pub fn config(self, j: usize) -> Result<EquationConfig> {
        let line = Grid::line(128, 1.0);
        let sine1 = BasisSpec::Sine1D {
            length: 1.0,
            modes: j,
        };
        let gl = |sigma| EquationConfig {
            physics: Physics::GinzburgLandau {
                reaction: 3.0,
                cubic: 1.0,
            },
            grid: line,
            t_final: 0.05,
            n_t: 50,
            save_stride: 1,
            space_stride: 1,
            sigma,
            substeps: 1,
            noise: NoiseSpec::cylindrical(sine1),
        };
        let kdv = |sigma, spectrum| EquationConfig {
            physics: Physics::Kdv {
                diffusion: 0.001,
                dispersion: 0.1,
                nonlinearity: 6.0,
            },
            grid: line,
            t_final: 0.5,
            n_t: 50,
            save_stride: 1,
            space_stride: 1,
            sigma,
            substeps: 40,
            noise: NoiseSpec::new(sine1, spectrum),
        };
        let phi42 = EquationConfig {
            physics: Physics::Phi42 { cubic: 1.0 },
            grid: Grid::square(32, 1.0),
            t_final: 0.025,
            n_t: 250,
            save_stride: 1,
            space_stride: 1,
            sigma: 0.1,
            substeps: 1,
            noise: NoiseSpec::cylindrical(BasisSpec::Sine2D {
                lx: 1.0,
                ly: 1.0,
                jx: j,
                jy: j,
            }),
        };
        let cfg = match self {
            Preset::GinzburgLandau01 => gl(0.1),
            Preset::GinzburgLandau1 => gl(1.0),
            Preset::KdvCyl => kdv(0.5, SpectrumSpec::Identity),
            Preset::KdvQ => kdv(1.0, SpectrumSpec::PolyDecay1D { r: 2.0, eps: 0.001 }),
            Preset::Wave => EquationConfig {
                physics: Physics::Wave { source: 1.0 },
                grid: line,
                t_final: 0.5,
                n_t: 500,
                save_stride: 5,
                space_stride: 1,
                sigma: 1.0,
                substeps: 1,
                noise: NoiseSpec::cylindrical(sine1),
            },
            Preset::NseVorticity => EquationConfig {
                physics: Physics::NseVorticity {
                    nu: 1e-4,
                    forcing_amplitude: 0.1,
                    project_mean: false,
                },
                grid: Grid::square(64, 1.0),
                t_final: 1.0,
                n_t: 1000,
                save_stride: 10,
                space_stride: 4,
                sigma: 0.005,
                substeps: 1,
                noise: NoiseSpec::new(
                    BasisSpec::ComplexExp2D {
                        lx: 1.0,
                        ly: 1.0,
                        jx: j,
                        jy: j,
                    },
                    SpectrumSpec::GaussDecay2D { alpha: 0.005 },
                )
                .with_trajectories(10),
            },
            Preset::Phi42Explicit | Preset::Phi42Renormalized => phi42,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()).unwrap(), p);
        }
        assert_eq!(Preset::from_name("kdv").unwrap(), Preset::KdvCyl);
        assert!(Preset::from_name("heat").is_err());
    }

    #[test]
    fn every_preset_validates_on_its_j_grid() {
        for p in Preset::ALL {
            for &j in p.j_grid() {
                p.config(j).unwrap();
            }
        }
    }
}
