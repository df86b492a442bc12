use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::noise::NoisePath;

use super::stencil::second_difference;
use super::{EquationConfig, Physics, Recorder, Trajectory};

/// Leapfrog in time, central differences in space.
///
/// ```text
/// u^{n+1} = 2u^n - u^{n-1} + dt^2 (D2 u^n + s(u^n)) + sigma dt u^n dW^n
/// u^1     = u^0 + dt v^0 + dt^2/2 (D2 u^0 + s(u^0)) + sigma dt/2 u^0 dW^0
/// ```
///
/// with `s(u) = source * (cos(pi u) + u^2)`. The multiplicative noise is
/// evaluated at the left end of each step.
pub fn solve_wave(u0: &[f64], v0: &[f64], noise: &NoisePath, cfg: &EquationConfig) -> Result<Trajectory> {
    let Physics::Wave { source } = cfg.physics else {
        return Err(Error::invalid("configuration is not a wave setup"));
    };
    cfg.validate()?;
    cfg.check_noise(noise)?;
    cfg.check_field("u0", u0)?;
    cfg.check_field("v0", v0)?;

    let dt = cfg.dt();
    let (dx, _) = cfg.grid.spacing();
    if dt / dx > 1.0 {
        return Err(Error::invalid(format!(
            "CFL violated: dt/dx = {:.4} > 1",
            dt / dx
        )));
    }
    let s = |u: f64| source * ((PI * u).cos() + u * u);
    let n = u0.len();
    let mut d2 = vec![0.0; n];
    let mut rec = Recorder::new(cfg);

    let mut prev = u0.to_vec();
    rec.offer(0, &prev)?;
    second_difference(&prev, dx, &mut d2);
    let dw = noise.increment(0);
    let mut cur: Vec<f64> = (0..n)
        .map(|m| {
            let u = prev[m];
            u + dt * v0[m] + 0.5 * dt * dt * (d2[m] + s(u)) + 0.5 * cfg.sigma * dt * u * dw[m]
        })
        .collect();
    rec.offer(1, &cur)?;

    for step in 1..cfg.n_steps() {
        second_difference(&cur, dx, &mut d2);
        let dw = noise.increment(step);
        for m in 0..n {
            let u = cur[m];
            let next = 2.0 * u - prev[m] + dt * dt * (d2[m] + s(u)) + cfg.sigma * dt * u * dw[m];
            prev[m] = next;
        }
        std::mem::swap(&mut prev, &mut cur);
        rec.offer(step + 1, &cur)?;
    }
    Ok(rec.finish(cfg.grid))
}

/// Energy `1/2 |(u1 - u0)/dt|^2 + 1/2 <u1, -D2 u0>` of the linear leapfrog
/// scheme between two consecutive states; conserved exactly when the source
/// and noise vanish.
pub fn wave_energy(u0: &[f64], u1: &[f64], dt: f64, dx: f64) -> f64 {
    let mut d2 = vec![0.0; u0.len()];
    second_difference(u0, dx, &mut d2);
    let kinetic: f64 = u0
        .iter()
        .zip(u1)
        .map(|(a, b)| ((b - a) / dt).powi(2))
        .sum();
    let potential: f64 = u1.iter().zip(&d2).map(|(a, b)| -a * b).sum();
    0.5 * (kinetic + potential) * dx
}
