//! The checked-in configs against the reference preset values.

mod common;

use common::config_dir;
use spde_core::noise::{BasisSpec, SpectrumSpec};
use spdegen::plan::Plan;
use spdegen::RunConfig;

#[test]
fn every_preset_ships_a_config() {
    common::check_config_files();
}

#[test]
fn configs_match_the_reference_values() {
    common::check_configs();
}

#[test]
fn equation_coefficients() {
    use spde_core::solvers::Physics;
    let load = |f: &str| Plan::new(&RunConfig::load(&config_dir().join(f)).unwrap(), 32).unwrap().cfg;
    assert_eq!(load("ginzburg-landau-1.toml").physics, Physics::GinzburgLandau { reaction: 3.0, cubic: 1.0 });
    assert_eq!(
        load("kdv-cyl.toml").physics,
        Physics::Kdv { diffusion: 0.001, dispersion: 0.1, nonlinearity: 6.0 }
    );
    assert_eq!(load("wave.toml").physics, Physics::Wave { source: 1.0 });
    let nse = load("nse-vorticity.toml");
    assert_eq!(
        nse.physics,
        Physics::NseVorticity { nu: 1e-4, forcing_amplitude: 0.1, project_mean: false }
    );
    assert_eq!(nse.noise.n_trajectories, 10);
    assert!(matches!(nse.noise.basis, BasisSpec::ComplexExp2D { .. }));
    assert_eq!(nse.noise.spectrum, SpectrumSpec::GaussDecay2D { alpha: 0.005 });
    assert_eq!(load("kdv-q.toml").noise.spectrum, SpectrumSpec::PolyDecay1D { r: 2.0, eps: 0.001 });
    assert_eq!(load("phi42-explicit.toml").physics, Physics::Phi42 { cubic: 1.0 });
}
