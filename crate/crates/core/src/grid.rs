use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid. Points are `x_m = m L / N` for `m = 0..N`, so the
/// right end point is identified with the left one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dim", rename_all = "snake_case")]
pub enum Grid {
    OneD { n: usize, length: f64 },
    TwoD { nx: usize, ny: usize, lx: f64, ly: f64 },
}

impl Grid {
    pub fn line(n: usize, length: f64) -> Self {
        Grid::OneD { n, length }
    }

    pub fn square(n: usize, length: f64) -> Self {
        Grid::TwoD {
            nx: n,
            ny: n,
            lx: length,
            ly: length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Grid::OneD { n, length } => n > 0 && length > 0.0 && length.is_finite(),
            Grid::TwoD { nx, ny, lx, ly } => {
                nx > 0 && ny > 0 && lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate grid {self:?}")))
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Grid::OneD { n, .. } => n,
            Grid::TwoD { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, Grid::TwoD { .. })
    }

    /// Spatial dims as they appear in the dataset layout (`[X]` or `[X, Y]`).
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Grid::OneD { n, .. } => vec![n],
            Grid::TwoD { nx, ny, .. } => vec![nx, ny],
        }
    }

    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            Grid::OneD { n, length } => (length / n as f64, 0.0),
            Grid::TwoD { nx, ny, lx, ly } => (lx / nx as f64, ly / ny as f64),
        }
    }

    pub fn axis_x(&self) -> Vec<f64> {
        match *self {
            Grid::OneD { n, length } | Grid::TwoD { nx: n, lx: length, .. } => {
                (0..n).map(|m| m as f64 * length / n as f64).collect()
            }
        }
    }

    pub fn axis_y(&self) -> Vec<f64> {
        match *self {
            Grid::OneD { .. } => Vec::new(),
            Grid::TwoD { ny, ly, .. } => (0..ny).map(|m| m as f64 * ly / ny as f64).collect(),
        }
    }

    /// All points, x-major (`index = ix * ny + iy`).
    pub fn points(&self) -> Points {
        match self {
            Grid::OneD { .. } => Points::OneD(self.axis_x()),
            Grid::TwoD { .. } => {
                let ys = self.axis_y();
                Points::TwoD(
                    self.axis_x()
                        .into_iter()
                        .flat_map(|x| ys.iter().map(move |&y| (x, y)))
                        .collect(),
                )
            }
        }
    }

    /// Evaluates `f` at every grid point in storage order.
    pub fn map1(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.axis_x().into_iter().map(f).collect()
    }

    pub fn map2(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let ys = self.axis_y();
        self.axis_x()
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect()
    }

    /// Strided subsampling that keeps index 0 on every axis.
    pub fn subsample(&self, stride: usize) -> Result<Grid> {
        if stride == 0 {
            return Err(Error::invalid("spatial stride must be positive"));
        }
        match *self {
            Grid::OneD { n, length } => {
                if n % stride != 0 {
                    return Err(Error::invalid(format!(
                        "spatial stride {stride} does not divide {n}"
                    )));
                }
                Ok(Grid::OneD {
                    n: n / stride,
                    length,
                })
            }
            Grid::TwoD { nx, ny, lx, ly } => {
                if nx % stride != 0 || ny % stride != 0 {
                    return Err(Error::invalid(format!(
                        "spatial stride {stride} does not divide {nx}x{ny}"
                    )));
                }
                Ok(Grid::TwoD {
                    nx: nx / stride,
                    ny: ny / stride,
                    lx,
                    ly,
                })
            }
        }
    }
}

/// Arbitrary evaluation points for basis functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Points {
    OneD(Vec<f64>),
    TwoD(Vec<(f64, f64)>),
}

impl Points {
    pub fn len(&self) -> usize {
        match self {
            Points::OneD(p) => p.len(),
            Points::TwoD(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
