//! Periodic finite-difference operators.

use crate::grid::Grid;

/// `out = D2 u` with the periodic three-point second difference.
pub(crate) fn second_difference(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    let s = 1.0 / (dx * dx);
    for m in 0..n {
        let l = u[(m + n - 1) % n];
        let r = u[(m + 1) % n];
        out[m] = (l - 2.0 * u[m] + r) * s;
    }
}

/// `out = lap_h u` with the periodic five-point stencil on an x-major grid.
pub(crate) fn laplacian_5pt(u: &[f64], grid: &Grid, out: &mut [f64]) {
    let Grid::TwoD { nx, ny, .. } = *grid else {
        unreachable!("five-point stencil needs a 2D grid")
    };
    let (dx, dy) = grid.spacing();
    let (sx, sy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    for ix in 0..nx {
        let xm = ((ix + nx - 1) % nx) * ny;
        let xp = ((ix + 1) % nx) * ny;
        let row = ix * ny;
        for iy in 0..ny {
            let ym = (iy + ny - 1) % ny;
            let yp = (iy + 1) % ny;
            let c = u[row + iy];
            out[row + iy] = (u[xm + iy] - 2.0 * c + u[xp + iy]) * sx
                + (u[row + ym] - 2.0 * c + u[row + yp]) * sy;
        }
    }
}

/// Factorised periodic tridiagonal system `(1 + 2r) u_m - r u_{m-1} - r u_{m+1}`,
/// i.e. `I - dt D2` with `r = dt / dx^2`. Solved with the Thomas algorithm
/// plus a Sherman–Morrison correction for the corner entries.
#[derive(Debug, Clone)]
pub(crate) struct CyclicTridiagonal {
    n: usize,
    sub: f64,
    // forward-eliminated coefficients of the modified (non-cyclic) system
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    z: Vec<f64>,
    fact: f64,
}

impl CyclicTridiagonal {
    pub(crate) fn implicit_diffusion(n: usize, r: f64) -> Self {
        let diag = 1.0 + 2.0 * r;
        let (sub, sup) = (-r, -r);
        let (alpha, beta) = (sup, sub); // corners A[n-1][0], A[0][n-1]
        let gamma = -diag;
        let mut b = vec![diag; n];
        b[0] = diag - gamma;
        b[n - 1] = diag - alpha * beta / gamma;

        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = b[0];
        c_prime[0] = sup / denom[0];
        for i in 1..n {
            denom[i] = b[i] - sub * c_prime[i - 1];
            c_prime[i] = sup / denom[i];
        }
        let mut this = Self {
            n,
            sub,
            c_prime,
            denom,
            z: Vec::new(),
            fact: 0.0,
        };
        let mut uvec = vec![0.0; n];
        uvec[0] = gamma;
        uvec[n - 1] = alpha;
        this.thomas(&mut uvec);
        this.fact = beta / gamma;
        this.z = uvec;
        this
    }

    fn thomas(&self, d: &mut [f64]) {
        d[0] /= self.denom[0];
        for i in 1..self.n {
            d[i] = (d[i] - self.sub * d[i - 1]) / self.denom[i];
        }
        for i in (0..self.n - 1).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
    }

    /// Solves in place.
    pub(crate) fn solve(&self, rhs: &mut [f64]) {
        self.thomas(rhs);
        let v_y = rhs[0] + self.fact * rhs[self.n - 1];
        let v_z = self.z[0] + self.fact * self.z[self.n - 1];
        let k = v_y / (1.0 + v_z);
        for (r, z) in rhs.iter_mut().zip(&self.z) {
            *r -= k * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solve_inverts_the_operator() {
        let n = 17;
        let r = 16.4;
        let sys = CyclicTridiagonal::implicit_diffusion(n, r);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
        // b = (I - r D) x with the periodic stencil
        let b: Vec<f64> = (0..n)
            .map(|i| (1.0 + 2.0 * r) * x[i] - r * x[(i + n - 1) % n] - r * x[(i + 1) % n])
            .collect();
        let mut sol = b.clone();
        sys.solve(&mut sol);
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = Grid::square(8, 1.0);
        let u = vec![2.5; 64];
        let mut out = vec![1.0; 64];
        laplacian_5pt(&u, &g, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn second_difference_of_sine() {
        let n = 64;
        let dx = 1.0 / n as f64;
        let u: Vec<f64> = (0..n)
            .map(|m| (std::f64::consts::TAU * m as f64 * dx).sin())
            .collect();
        let mut out = vec![0.0; n];
        second_difference(&u, dx, &mut out);
        let sym = -4.0 / (dx * dx) * (std::f64::consts::PI * dx).sin().powi(2);
        for (o, v) in out.iter().zip(&u) {
            assert!((o - sym * v).abs() < 1e-9);
        }
    }
}
