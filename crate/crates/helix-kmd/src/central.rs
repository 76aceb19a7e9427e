//! Exact rigidly rotating solutions of the filament system: the straight
//! rotating polygon, the N-helix family, the stationary helix and the
//! polygon of helices around a straight central filament.
//!
//! Every family has the form `Xⱼ(s,t) = r e^{iΩt} e^{iνs} e^{2πi(j−1)/N}`.
//! The rotation speed `Ω` is the coefficient in `e^{iΩt}`; the concentrated
//! Euler solutions rotate as `e^{−iαt}`, so `α = −Ω`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmd::{FilamentEnsemble, C64};

pub const DEFAULT_KAPPA: f64 = 2.0;
pub const DEFAULT_CORE_CONSTANT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    StraightPolygon,
    PolygonHelix,
    PolygonWithCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelixConfig {
    pub r: f64,
    pub h: f64,
    pub n: usize,
    pub nu: f64,
    pub variant: Variant,
    /// circulation of the central filament (PolygonWithCenter only)
    pub kappa_center: f64,
}

/// Axial sampling: `m` points on one period of length `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialGrid {
    pub m: usize,
    pub period: f64,
}

impl AxialGrid {
    /// `m` samples over `periods` pitches `2πh`.
    pub fn pitches(m: usize, h: f64, periods: usize) -> Self {
        Self {
            m,
            period: 2.0 * PI * h.abs() * periods as f64,
        }
    }
}

impl HelixConfig {
    pub fn straight_polygon(r: f64, n: usize) -> Result<Self> {
        Self {
            r,
            h: 1.0,
            n,
            nu: 0.0,
            variant: Variant::StraightPolygon,
            kappa_center: DEFAULT_KAPPA,
        }
        .validated()
    }

    pub fn polygon_helix(r: f64, h: f64, n: usize) -> Result<Self> {
        Self {
            r,
            h,
            n,
            nu: 1.0 / h,
            variant: Variant::PolygonHelix,
            kappa_center: DEFAULT_KAPPA,
        }
        .validated()
    }

    pub fn polygon_with_center(r: f64, h: f64, n: usize) -> Result<Self> {
        Self {
            r,
            h,
            n,
            nu: 1.0 / h,
            variant: Variant::PolygonWithCenter,
            kappa_center: DEFAULT_KAPPA,
        }
        .validated()
    }

    /// The stationary member of the helix family, `r = h√(N−1)`.
    pub fn stationary_helix(h: f64, n: usize) -> Result<Self> {
        Self::polygon_helix(stationary_radius(h, n)?, h, n)
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::DegenerateConfig(format!("r = {} must be positive", self.r)));
        }
        if self.h == 0.0 || !self.h.is_finite() {
            return Err(Error::DegenerateConfig("h must be nonzero".into()));
        }
        if self.n < 2 {
            return Err(Error::DegenerateConfig(format!("N = {} < 2", self.n)));
        }
        if self.variant != Variant::StraightPolygon && (self.nu * self.h - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateConfig(format!(
                "helix variants need nu*h = 1 (got {})",
                self.nu * self.h
            )));
        }
        if self.kappa_center == 0.0 {
            return Err(Error::DegenerateConfig("central circulation must be nonzero".into()));
        }
        Ok(self)
    }

    pub fn n_filaments(&self) -> usize {
        match self.variant {
            Variant::PolygonWithCenter => self.n + 1,
            _ => self.n,
        }
    }

    /// Index of the first polygon filament in a sampled ensemble.
    pub fn first_outer(&self) -> usize {
        usize::from(self.variant == Variant::PolygonWithCenter)
    }
}

/// `Ω` with `Xⱼ ∝ e^{iΩt}`, for κ = 2 and α = 1 on the polygon.
pub fn rotation_speed(c: &HelixConfig) -> f64 {
    let k = DEFAULT_KAPPA;
    let n1 = (c.n - 1) as f64;
    let r2 = c.r * c.r;
    match c.variant {
        Variant::StraightPolygon => k * n1 / r2,
        Variant::PolygonHelix => -2.0 * (c.nu * c.nu - n1 / r2),
        // interaction κ(N−1)/r² + 2κ₀/r², self-induction −κν²
        Variant::PolygonWithCenter => -k * c.nu * c.nu + (k * n1 + 2.0 * c.kappa_center) / r2,
    }
}

pub fn stationary_radius(h: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DegenerateConfig(format!("N = {n} < 2 has no stationary helix")));
    }
    if h == 0.0 {
        return Err(Error::DegenerateConfig("h must be nonzero".into()));
    }
    Ok(h.abs() * ((n - 1) as f64).sqrt())
}

/// Leading-order rotation speed `α` of the concentrated Euler solution.
pub fn theorem_alpha(r: f64, h: f64, n: usize, variant: Variant) -> f64 {
    let m = match variant {
        Variant::PolygonWithCenter => n + 1,
        _ => n - 1,
    } as f64;
    2.0 * (1.0 / (h * h) - m / (r * r))
}

/// The exact solution at time `t` on the given axial grid. Outer filaments
/// get κ = 2, α = 1; for PolygonWithCenter filament 0 is the central line
/// `X₀ ≡ 0` with circulation `kappa_center`.
pub fn sample(c: &HelixConfig, t: f64, grid: AxialGrid) -> Result<FilamentEnsemble> {
    let omega = rotation_speed(c);
    let lead = c.first_outer();
    let n_tot = c.n_filaments();
    let mut positions = Vec::with_capacity(n_tot);
    let mut kappa = Vec::with_capacity(n_tot);
    if lead == 1 {
        positions.push(vec![C64::new(0.0, 0.0); grid.m]);
        kappa.push(c.kappa_center);
    }
    for j in 0..c.n {
        let theta = 2.0 * PI * j as f64 / c.n as f64;
        positions.push(
            (0..grid.m)
                .map(|m| {
                    let s = m as f64 * grid.period / grid.m as f64;
                    C64::from_polar(c.r, omega * t + c.nu * s + theta)
                })
                .collect(),
        );
        kappa.push(DEFAULT_KAPPA);
    }
    let mut e = FilamentEnsemble::new(positions, kappa, vec![DEFAULT_CORE_CONSTANT; n_tot], grid.period)?;
    e.time = t;
    Ok(e)
}

/// Exact trajectory sampled at `t = k·dt`, `k = 0..=steps`.
pub fn sample_trajectory(c: &HelixConfig, dt: f64, steps: usize, grid: AxialGrid) -> Result<crate::kmd::Trajectory> {
    let snaps = (0..=steps)
        .map(|k| sample(c, k as f64 * dt, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::kmd::Trajectory::from_snapshots(snaps, "exact"))
}
