use crate::error::{Error, Result};
use crate::noise::NoisePath;

use super::stencil::CyclicTridiagonal;
use super::{EquationConfig, Physics, Recorder, Trajectory};

/// Backward Euler for the Laplacian, explicit reaction and additive noise:
///
/// ```text
/// (I - dt D2) u^{n+1} = u^n + dt (a u^n - b (u^n)^3) + sigma dW^n
/// ```
pub fn solve_ginzburg_landau(u0: &[f64], noise: &NoisePath, cfg: &EquationConfig) -> Result<Trajectory> {
    let Physics::GinzburgLandau { reaction, cubic } = cfg.physics else {
        return Err(Error::invalid("configuration is not a Ginzburg-Landau setup"));
    };
    cfg.validate()?;
    cfg.check_noise(noise)?;
    cfg.check_field("u0", u0)?;

    let dt = cfg.dt();
    let (dx, _) = cfg.grid.spacing();
    let system = CyclicTridiagonal::implicit_diffusion(u0.len(), dt / (dx * dx));

    let mut rec = Recorder::new(cfg);
    let mut u = u0.to_vec();
    rec.offer(0, &u)?;
    for step in 0..cfg.n_steps() {
        let dw = noise.increment(step);
        for (v, &w) in u.iter_mut().zip(dw.iter()) {
            *v += dt * (reaction * *v - cubic * *v * *v * *v) + cfg.sigma * w;
        }
        system.solve(&mut u);
        rec.offer(step + 1, &u)?;
    }
    Ok(rec.finish(cfg.grid))
}
