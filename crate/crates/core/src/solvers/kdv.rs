use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{wavenumber, Fft1};
use crate::noise::NoisePath;

use super::{EquationConfig, Physics, Recorder, Trajectory};

/// Bound on `h |c| max|u| k_max`; RK4 is stable up to about 2.8 on the
/// imaginary axis.
pub const KDV_CFL: f64 = 1.0;

/// Fourier pseudo-spectral KdV solver.
///
/// The stiff linear symbol `-d k^2 + i gamma k^3` is integrated exactly with
/// an integrating factor; the quadratic term `c u u_x = (c/2) (u^2)_x` is
/// advanced with classical RK4 and the 2/3 rule. Each noise step is split
/// into at least `substeps` sub-steps, more when the current amplitude
/// needs it: `h |c| max|u| k_max <= KDV_CFL`. The noise increment is added
/// after each full step.
pub fn solve_kdv(u0: &[f64], noise: &NoisePath, cfg: &EquationConfig) -> Result<Trajectory> {
    let Physics::Kdv {
        diffusion,
        dispersion,
        nonlinearity,
    } = cfg.physics
    else {
        return Err(Error::invalid("configuration is not a KdV setup"));
    };
    cfg.validate()?;
    cfg.check_noise(noise)?;
    cfg.check_field("u0", u0)?;

    let crate::grid::Grid::OneD { n, length } = cfg.grid else {
        unreachable!("validated as 1D")
    };
    let fft = Fft1::new(n);
    let dt = cfg.dt();
    let i = Complex64::i();

    // derivative symbol; the Nyquist bin carries no odd derivative
    let k: Vec<f64> = (0..n)
        .map(|b| {
            let w = wavenumber(b, n);
            if n % 2 == 0 && w == n as i64 / 2 {
                0.0
            } else {
                std::f64::consts::TAU * w as f64 / length
            }
        })
        .collect();
    let k_even: Vec<f64> = (0..n)
        .map(|b| std::f64::consts::TAU * wavenumber(b, n) as f64 / length)
        .collect();
    let keep: Vec<bool> = (0..n)
        .map(|b| 3 * wavenumber(b, n).unsigned_abs() as usize <= n)
        .collect();
    let k_max = std::f64::consts::TAU * (n / 3) as f64 / length;
    let symbol: Vec<Complex64> = k
        .iter()
        .zip(&k_even)
        .map(|(&ko, &ke)| Complex64::new(-diffusion * ke * ke, dispersion * ko * ko * ko))
        .collect();
    let grad: Vec<Complex64> = k.iter().map(|&kk| i * kk * (0.5 * nonlinearity)).collect();
    // integrating factors for the current sub-step count
    let factors = |subs: usize| -> (f64, Vec<Complex64>, Vec<Complex64>) {
        let h = dt / subs as f64;
        let half: Vec<Complex64> = symbol.iter().map(|l| (l * (0.5 * h)).exp()).collect();
        let full = half.iter().map(|e| e * e).collect();
        (h, half, full)
    };
    let substeps_for = |u: &[f64]| -> usize {
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let need = (dt * nonlinearity.abs() * umax * k_max / KDV_CFL).ceil();
        if need.is_finite() && need < 1e9 {
            (need as usize).max(cfg.substeps)
        } else {
            cfg.substeps
        }
    };

    let mut work = vec![Complex64::default(); n];
    let mut nonlinear = |uh: &[Complex64], out: &mut [Complex64], h: f64| {
        if nonlinearity == 0.0 {
            out.iter_mut().for_each(|z| *z = Complex64::default());
            return;
        }
        for ((w, &z), &kp) in work.iter_mut().zip(uh).zip(&keep) {
            *w = if kp { z } else { Complex64::default() };
        }
        fft.inverse(&mut work);
        work.iter_mut().for_each(|z| *z = Complex64::new(z.re * z.re, 0.0));
        fft.forward(&mut work);
        for (((o, w), g), &kp) in out.iter_mut().zip(&work).zip(&grad).zip(&keep) {
            *o = if kp { g * w * h } else { Complex64::default() };
        }
    };

    let mut uh = fft.forward_real(u0);
    let (mut a, mut b, mut c, mut d) = (
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
    );
    let mut stage = vec![Complex64::default(); n];
    let mut rec = Recorder::new(cfg);
    rec.offer(0, u0)?;
    let mut subs = substeps_for(u0);
    let (mut h, mut half, mut full) = factors(subs);
    for step in 0..cfg.n_steps() {
        for _ in 0..subs {
            nonlinear(&uh, &mut a, h);
            for m in 0..n {
                stage[m] = half[m] * (uh[m] + 0.5 * a[m]);
            }
            nonlinear(&stage, &mut b, h);
            for m in 0..n {
                stage[m] = half[m] * uh[m] + 0.5 * b[m];
            }
            nonlinear(&stage, &mut c, h);
            for m in 0..n {
                stage[m] = full[m] * uh[m] + half[m] * c[m];
            }
            nonlinear(&stage, &mut d, h);
            for m in 0..n {
                uh[m] = full[m] * uh[m]
                    + (full[m] * a[m] + 2.0 * half[m] * (b[m] + c[m]) + d[m]) / 6.0;
            }
        }
        if cfg.sigma != 0.0 {
            let dw: Vec<f64> = noise.increment(step).iter().map(|w| cfg.sigma * w).collect();
            for (z, w) in uh.iter_mut().zip(fft.forward_real(&dw)) {
                *z += w;
            }
        }
        let u = fft.inverse_real(uh.clone());
        rec.offer(step + 1, &u)?;
        let next = substeps_for(&u);
        if next != subs {
            subs = next;
            (h, half, full) = factors(subs);
        }
    }
    Ok(rec.finish(cfg.grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::presets::Preset;

    #[test]
    fn zero_stays_zero() {
        let cfg = Preset::KdvCyl.config(32).unwrap();
        let noise = NoisePath::zero(cfg.noise, cfg.grid, cfg.n_steps(), cfg.dt()).unwrap();
        let t = solve_kdv(&vec![0.0; 128], &noise, &cfg).unwrap();
        assert!(t.values.iter().all(|v| v.abs() < 1e-300));
    }
}
