use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{wavenumber, Fft2};
use crate::grid::Grid;
use crate::noise::NoisePath;

use super::{EquationConfig, Physics, Recorder, Trajectory};

/// `f(x, y) = sin(2 pi (x + y)) + cos(2 pi (x + y))` on the grid.
pub fn vorticity_forcing(grid: &Grid) -> Vec<f64> {
    grid.map2(|x, y| (TAU * (x + y)).sin() + (TAU * (x + y)).cos())
}

/// Pseudo-spectral vorticity solver on the periodic square.
///
/// The velocity is recovered from `psi = (-lap)^{-1} w` as
/// `u = (psi_y, -psi_x)`; the advection term is evaluated in conservative
/// form `div(u w)` from 2/3-dealiased fields. Viscosity is Crank–Nicolson,
/// advection and forcing Adams–Bashforth 2 (Euler on the first step). The
/// mean mode is held at zero.
pub fn solve_nse_vorticity(w0: &[f64], noise: &NoisePath, cfg: &EquationConfig) -> Result<Trajectory> {
    let Physics::NseVorticity {
        nu,
        forcing_amplitude,
        project_mean,
    } = cfg.physics
    else {
        return Err(Error::invalid("configuration is not a vorticity setup"));
    };
    cfg.validate()?;
    cfg.check_noise(noise)?;
    cfg.check_field("w0", w0)?;
    let Grid::TwoD { nx, ny, lx, ly } = cfg.grid else {
        unreachable!("validated as 2D")
    };
    let n_points = nx * ny;
    let mean = w0.iter().sum::<f64>() / n_points as f64;
    let scale = w0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-10 * scale && !project_mean {
        return Err(Error::invalid(format!(
            "initial vorticity has nonzero mean {mean:.3e}"
        )));
    }

    let fft = Fft2::new(nx, ny);
    let dt = cfg.dt();
    let i = Complex64::i();
    let mut kx = vec![0.0; n_points];
    let mut ky = vec![0.0; n_points];
    let mut k2 = vec![0.0; n_points];
    let mut keep = vec![false; n_points];
    for a in 0..nx {
        for b in 0..ny {
            let (wa, wb) = (wavenumber(a, nx), wavenumber(b, ny));
            let idx = a * ny + b;
            let nyq_a = nx % 2 == 0 && wa == nx as i64 / 2;
            let nyq_b = ny % 2 == 0 && wb == ny as i64 / 2;
            kx[idx] = if nyq_a { 0.0 } else { TAU * wa as f64 / lx };
            ky[idx] = if nyq_b { 0.0 } else { TAU * wb as f64 / ly };
            let (ex, ey) = (TAU * wa as f64 / lx, TAU * wb as f64 / ly);
            k2[idx] = ex * ex + ey * ey;
            keep[idx] = 3 * wa.unsigned_abs() as usize <= nx && 3 * wb.unsigned_abs() as usize <= ny;
        }
    }
    let implicit: Vec<f64> = k2.iter().map(|k| 1.0 / (1.0 + 0.5 * nu * dt * k)).collect();
    let explicit: Vec<f64> = k2.iter().map(|k| 1.0 - 0.5 * nu * dt * k).collect();
    let forcing: Vec<Complex64> = {
        let mut f = fft.forward_real(&vorticity_forcing(&cfg.grid));
        f.iter_mut().for_each(|z| *z *= forcing_amplitude);
        f[0] = Complex64::default();
        f
    };

    let mut wh = fft.forward_real(w0);
    wh[0] = Complex64::default();

    let mut ubuf = vec![Complex64::default(); n_points];
    let mut vbuf = vec![Complex64::default(); n_points];
    let mut wbuf = vec![Complex64::default(); n_points];
    // G = -div(u w) + f in spectral space
    let mut tendency = |wh: &[Complex64], out: &mut [Complex64]| {
        for idx in 0..n_points {
            let (u, v, w) = if keep[idx] && k2[idx] > 0.0 {
                let psi = wh[idx] / k2[idx];
                (i * ky[idx] * psi, -i * kx[idx] * psi, wh[idx])
            } else {
                Default::default()
            };
            ubuf[idx] = u;
            vbuf[idx] = v;
            wbuf[idx] = w;
        }
        fft.inverse(&mut ubuf);
        fft.inverse(&mut vbuf);
        fft.inverse(&mut wbuf);
        for idx in 0..n_points {
            let w = wbuf[idx].re;
            ubuf[idx] = Complex64::new(ubuf[idx].re * w, 0.0);
            vbuf[idx] = Complex64::new(vbuf[idx].re * w, 0.0);
        }
        fft.forward(&mut ubuf);
        fft.forward(&mut vbuf);
        for idx in 0..n_points {
            out[idx] = if keep[idx] {
                -(i * kx[idx] * ubuf[idx] + i * ky[idx] * vbuf[idx]) + forcing[idx]
            } else {
                forcing[idx]
            };
        }
        out[0] = Complex64::default();
    };

    let mut g_prev = vec![Complex64::default(); n_points];
    let mut g_cur = vec![Complex64::default(); n_points];
    let mut rec = Recorder::new(cfg);
    let mut w_phys: Vec<f64> = if mean == 0.0 {
        w0.to_vec()
    } else {
        fft.inverse_real(wh.clone())
    };
    rec.offer(0, &w_phys)?;
    for step in 0..cfg.n_steps() {
        tendency(&wh, &mut g_cur);
        if step == 0 {
            g_prev.copy_from_slice(&g_cur);
        }
        let noise_hat = if cfg.sigma != 0.0 {
            let dw: Vec<f64> = noise.increment(step).iter().map(|w| cfg.sigma * w).collect();
            Some(fft.forward_real(&dw))
        } else {
            None
        };
        for idx in 0..n_points {
            let ab2 = 1.5 * g_cur[idx] - 0.5 * g_prev[idx];
            let mut rhs = explicit[idx] * wh[idx] + dt * ab2;
            if let Some(nh) = &noise_hat {
                rhs += nh[idx];
            }
            wh[idx] = implicit[idx] * rhs;
        }
        wh[0] = Complex64::default();
        std::mem::swap(&mut g_prev, &mut g_cur);
        w_phys = fft.inverse_real(wh.clone());
        rec.offer(step + 1, &w_phys)?;
    }
    Ok(rec.finish(cfg.grid))
}
