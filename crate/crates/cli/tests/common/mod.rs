//! Reference preset values shared by the fixture and acceptance tests.

#![allow(dead_code)]

use std::path::PathBuf;

use spde_core::noise::SpectrumSpec;
use spde_core::{EquationKind, Grid};
use spdegen::plan::Plan;
use spdegen::RunConfig;

pub struct Row {
    pub file: &'static str,
    pub kind: EquationKind,
    /// Domain side length and dimension.
    pub space: (f64, usize),
    pub t_final: f64,
    /// Solver resolution per axis, then stored resolution.
    pub n_d: (usize, usize),
    /// Solver time points, then stored.
    pub n_t: (usize, usize),
    pub j: &'static [usize],
    pub sigma: f64,
    pub q_wiener: bool,
    pub renormalised: bool,
}

const REGULAR: &[usize] = &[32, 64, 128, 256];
const SINGULAR: &[usize] = &[2, 8, 32, 64, 128];

pub const ROWS: &[Row] = &[
    Row { file: "ginzburg-landau-01.toml", kind: EquationKind::GinzburgLandau, space: (1.0, 1), t_final: 0.05, n_d: (128, 128), n_t: (50, 50), j: REGULAR, sigma: 0.1, q_wiener: false, renormalised: false },
    Row { file: "ginzburg-landau-1.toml", kind: EquationKind::GinzburgLandau, space: (1.0, 1), t_final: 0.05, n_d: (128, 128), n_t: (50, 50), j: REGULAR, sigma: 1.0, q_wiener: false, renormalised: false },
    Row { file: "kdv-cyl.toml", kind: EquationKind::Kdv, space: (1.0, 1), t_final: 0.5, n_d: (128, 128), n_t: (50, 50), j: REGULAR, sigma: 0.5, q_wiener: false, renormalised: false },
    Row { file: "kdv-q.toml", kind: EquationKind::Kdv, space: (1.0, 1), t_final: 0.5, n_d: (128, 128), n_t: (50, 50), j: REGULAR, sigma: 1.0, q_wiener: true, renormalised: false },
    Row { file: "wave.toml", kind: EquationKind::Wave, space: (1.0, 1), t_final: 0.5, n_d: (128, 128), n_t: (500, 100), j: REGULAR, sigma: 1.0, q_wiener: false, renormalised: false },
    Row { file: "nse-vorticity.toml", kind: EquationKind::NseVorticity, space: (1.0, 2), t_final: 1.0, n_d: (64, 16), n_t: (1000, 100), j: REGULAR, sigma: 0.005, q_wiener: true, renormalised: false },
    Row { file: "phi42-explicit.toml", kind: EquationKind::Phi42, space: (1.0, 2), t_final: 0.025, n_d: (32, 32), n_t: (250, 250), j: SINGULAR, sigma: 0.1, q_wiener: false, renormalised: false },
    Row { file: "phi42-renormalized.toml", kind: EquationKind::Phi42, space: (1.0, 2), t_final: 0.025, n_d: (32, 32), n_t: (250, 250), j: SINGULAR, sigma: 0.1, q_wiener: false, renormalised: true },
];

pub fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// The config directory holds exactly one file per row.
pub fn check_config_files() {
    let mut files: Vec<String> = std::fs::read_dir(config_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f.ends_with(".toml"))
        .collect();
    files.sort();
    let mut want: Vec<&str> = ROWS.iter().map(|r| r.file).collect();
    want.sort();
    assert_eq!(files, want);
}

/// Loads every checked-in config and compares it with `ROWS`.
pub fn check_configs() {
    for row in ROWS {
        let run = RunConfig::load(&config_dir().join(row.file)).unwrap();
        run.validate().unwrap();
        assert_eq!(run.samples, 1200, "{}", row.file);
        assert_eq!(run.degrees(), row.j, "{}", row.file);
        for &j in row.j {
            let plan = Plan::new(&run, j).unwrap();
            let cfg = plan.cfg;
            assert_eq!(cfg.kind(), row.kind, "{}", row.file);
            assert_eq!(cfg.t_final, row.t_final, "{}", row.file);
            assert_eq!(cfg.sigma, row.sigma, "{}", row.file);
            match (cfg.grid, row.space.1) {
                (Grid::OneD { n, length }, 1) => {
                    assert_eq!((n, length), (row.n_d.0, row.space.0), "{}", row.file);
                }
                (Grid::TwoD { nx, ny, lx, ly }, 2) => {
                    assert_eq!((nx, ny), (row.n_d.0, row.n_d.0), "{}", row.file);
                    assert_eq!((lx, ly), (row.space.0, row.space.0), "{}", row.file);
                }
                other => panic!("{}: unexpected grid {other:?}", row.file),
            }
            assert_eq!(cfg.n_t, row.n_t.0, "{}", row.file);
            let stored = plan.dims(1200);
            assert_eq!(stored.n, 1200);
            assert_eq!(stored.t, row.n_t.1, "{}", row.file);
            assert_eq!(stored.x, row.n_d.1, "{}", row.file);
            assert_eq!(stored.y, (row.space.1 == 2).then_some(row.n_d.1), "{}", row.file);

            let (jx, jy) = cfg.noise.basis.degrees();
            assert_eq!(jx, j);
            if row.space.1 == 2 {
                assert_eq!(jy, j);
            }
            let q = !matches!(cfg.noise.spectrum, SpectrumSpec::Identity);
            assert_eq!(q, row.q_wiener, "{}", row.file);
            assert_eq!(plan.constant.is_some(), row.renormalised, "{}", row.file);
        }
    }
}
