use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest round-trip form, in scientific notation outside `[1e-4, 1e15)`.
pub fn csv_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridGeometry {
    /// Node `(i, j)` at `(x0 + i·dx, y0 + j·dy)`, stored row-major in `j`.
    Cartesian {
        x0: f64,
        y0: f64,
        dx: f64,
        dy: f64,
        nx: usize,
        ny: usize,
    },
    /// Node `(i, k)` at radius `radii[i]`, angle `(k + offset)·2π/n_theta`,
    /// stored with `k` fastest.
    Polar {
        radii: Vec<f64>,
        n_theta: usize,
        offset: f64,
    },
}

/// A sampled planar scalar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl GridGeometry {
    pub fn len(&self) -> usize {
        match self {
            GridGeometry::Cartesian { nx, ny, .. } => nx * ny,
            GridGeometry::Polar { radii, n_theta, .. } => radii.len() * n_theta,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self {
            GridGeometry::Cartesian { x0, y0, dx, dy, nx, .. } => {
                [x0 + (idx % nx) as f64 * dx, y0 + (idx / nx) as f64 * dy]
            }
            GridGeometry::Polar { radii, n_theta, offset } => {
                let r = radii[idx / n_theta];
                let th = ((idx % n_theta) as f64 + offset) * std::f64::consts::TAU / *n_theta as f64;
                [r * th.cos(), r * th.sin()]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GridGeometry::Cartesian { dx, dy, nx, ny, .. } => {
                if !(*dx > 0.0 && *dy > 0.0) || *nx == 0 || *ny == 0 {
                    return Err(Error::InvalidParameters("Cartesian grid needs positive spacing".into()));
                }
            }
            GridGeometry::Polar { radii, n_theta, .. } => {
                if *n_theta == 0 || radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
                    return Err(Error::InvalidParameters("polar radii must increase".into()));
                }
            }
        }
        Ok(())
    }
}

impl ScalarGrid {
    pub fn sample(geometry: GridGeometry, f: impl Fn([f64; 2]) -> f64 + Sync) -> Result<Self> {
        use rayon::prelude::*;
        geometry.validate()?;
        let values: Vec<f64> = (0..geometry.len()).into_par_iter().map(|i| f(geometry.point(i))).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid sample"));
        }
        Ok(Self { geometry, values })
    }

    pub fn cartesian(x0: f64, y0: f64, dx: f64, dy: f64, nx: usize, ny: usize) -> GridGeometry {
        GridGeometry::Cartesian { x0, y0, dx, dy, nx, ny }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// CSV rows `x,y,value`.
    pub fn write_csv<W: Write>(&self, mut w: W, name: &str) -> std::io::Result<()> {
        writeln!(w, "x,y,{name}")?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.geometry.point(i);
            writeln!(w, "{},{},{}", csv_float(p[0]), csv_float(p[1]), csv_float(*v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_points_and_validation() {
        let g = GridGeometry::Polar {
            radii: vec![0.5, 1.0],
            n_theta: 4,
            offset: 0.0,
        };
        let p = g.point(5);
        assert!((p[0]).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let bad = GridGeometry::Polar {
            radii: vec![1.0, 0.5],
            n_theta: 4,
            offset: 0.0,
        };
        assert!(bad.validate().is_err());
        let s = ScalarGrid::sample(ScalarGrid::cartesian(0.0, 0.0, 0.5, 0.5, 3, 2), |p| p[0] + 10.0 * p[1]).unwrap();
        assert_eq!(s.values, vec![0.0, 0.5, 1.0, 5.0, 5.5, 6.0]);
    }
}
