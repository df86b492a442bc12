use crate::error::{Error, Result};
use crate::noise::NoisePath;

use super::stencil::laplacian_5pt;
use super::{EquationConfig, Physics, Recorder, Trajectory};

/// Largest `dt / dx^2` for which explicit Euler with the five-point
/// Laplacian is stable.
pub const PHI42_STABILITY_BOUND: f64 = 0.25;

/// Checks `dt / min(dx, dy)^2 < 1/4`.
pub fn check_stability(cfg: &EquationConfig) -> Result<()> {
    let (dx, dy) = cfg.grid.spacing();
    let h = dx.min(dy);
    let ratio = cfg.dt() / (h * h);
    if ratio >= PHI42_STABILITY_BOUND {
        return Err(Error::invalid(format!(
            "explicit scheme unstable: dt/dx^2 = {ratio:.4} >= {PHI42_STABILITY_BOUND}"
        )));
    }
    Ok(())
}

/// Explicit Euler without renormalisation:
///
/// ```text
/// u^{n+1} = u^n + dt (lap_h u^n - c (u^n)^3) + sigma dW^n
/// ```
pub fn solve_phi42_explicit(u0: &[f64], noise: &NoisePath, cfg: &EquationConfig) -> Result<Trajectory> {
    let Physics::Phi42 { cubic } = cfg.physics else {
        return Err(Error::invalid("configuration is not a Phi^4_2 setup"));
    };
    cfg.validate()?;
    check_stability(cfg)?;
    cfg.check_noise(noise)?;
    cfg.check_field("u0", u0)?;

    let dt = cfg.dt();
    let mut rec = Recorder::new(cfg);
    let mut u = u0.to_vec();
    let mut lap = vec![0.0; u.len()];
    rec.offer(0, &u)?;
    for step in 0..cfg.n_steps() {
        laplacian_5pt(&u, &cfg.grid, &mut lap);
        let dw = noise.increment(step);
        for ((v, l), &w) in u.iter_mut().zip(&lap).zip(dw.iter()) {
            *v += dt * (l - cubic * *v * *v * *v) + cfg.sigma * w;
        }
        rec.offer(step + 1, &u)?;
    }
    Ok(rec.finish(cfg.grid))
}
