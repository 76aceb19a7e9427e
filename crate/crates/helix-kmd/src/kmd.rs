//! The Klein–Majda–Damodaran system for N nearly parallel filaments
//!
//! ```text
//! ∂ₜXⱼ = i αⱼκⱼ ∂ₛ²Xⱼ + 2i Σ_{k≠j} κₖ (Xⱼ − Xₖ)/|Xⱼ − Xₖ|²
//! ```
//!
//! with `s` periodic. Planar points are complex numbers. Time stepping is
//! Strang splitting: the linear Schrödinger part is solved exactly in
//! Fourier space, the point-vortex interaction with RK4 at every `s`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::csv_float;

pub type C64 = Complex64;

/// Default collision threshold relative to the initial minimum separation.
pub const COLLISION_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilamentEnsemble {
    /// `positions[j][m] = Xⱼ(sₘ)`, `sₘ = m·axial_period/M`.
    pub positions: Vec<Vec<C64>>,
    pub circulations: Vec<f64>,
    pub core_constants: Vec<f64>,
    pub axial_period: f64,
    pub time: f64,
}

impl FilamentEnsemble {
    pub fn new(
        positions: Vec<Vec<C64>>,
        circulations: Vec<f64>,
        core_constants: Vec<f64>,
        axial_period: f64,
    ) -> Result<Self> {
        let e = Self {
            positions,
            circulations,
            core_constants,
            axial_period,
            time: 0.0,
        };
        e.validate()?;
        Ok(e)
    }

    /// Every filament a copy of `curve(s)` rotated by the polygon angle,
    /// with common κ and α.
    pub fn from_fn(
        n: usize,
        m: usize,
        axial_period: f64,
        kappa: f64,
        alpha: f64,
        curve: impl Fn(usize, f64) -> C64,
    ) -> Result<Self> {
        let positions = (0..n)
            .map(|j| (0..m).map(|k| curve(j, k as f64 * axial_period / m as f64)).collect())
            .collect();
        Self::new(positions, vec![kappa; n], vec![alpha; n], axial_period)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 {
            return Err(Error::InvalidState("no filaments".into()));
        }
        let m = self.positions[0].len();
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidState(format!("M = {m} is not a power of two")));
        }
        if self.positions.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidState("filaments have different sample counts".into()));
        }
        if self.circulations.len() != n || self.core_constants.len() != n {
            return Err(Error::InvalidState("one circulation and core constant per filament".into()));
        }
        if self.circulations.iter().any(|&k| k == 0.0 || !k.is_finite()) {
            return Err(Error::InvalidState("circulations must be finite and nonzero".into()));
        }
        if !(self.axial_period > 0.0 && self.axial_period.is_finite()) {
            return Err(Error::InvalidState("axial period must be positive".into()));
        }
        if self.positions.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("filament positions"));
        }
        if self.min_separation() <= 0.0 {
            return Err(Error::InvalidState("filaments intersect".into()));
        }
        Ok(())
    }

    pub fn n_filaments(&self) -> usize {
        self.positions.len()
    }

    pub fn n_samples(&self) -> usize {
        self.positions[0].len()
    }

    pub fn s(&self, m: usize) -> f64 {
        m as f64 * self.axial_period / self.n_samples() as f64
    }

    pub fn min_separation(&self) -> f64 {
        min_separation(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.positions.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Multiply every position by `e^{iφ}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let w = C64::from_polar(1.0, phi);
        let mut out = self.clone();
        out.positions.iter_mut().flatten().for_each(|z| *z *= w);
        out
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.positions
            .iter()
            .flatten()
            .zip(other.positions.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Minimum over `j ≠ k` and `s` of `|Xⱼ(s) − Xₖ(s)|`; `+∞` for one filament.
pub fn min_separation(state: &FilamentEnsemble) -> f64 {
    let mut d = f64::INFINITY;
    let p = &state.positions;
    for j in 0..p.len() {
        for k in j + 1..p.len() {
            for (a, b) in p[j].iter().zip(&p[k]) {
                d = d.min((a - b).norm());
            }
        }
    }
    d
}

/// `Σⱼ κⱼ · mean_s Xⱼ(s)`.
pub fn center_of_vorticity(state: &FilamentEnsemble) -> C64 {
    state
        .positions
        .iter()
        .zip(&state.circulations)
        .map(|(x, &k)| x.iter().sum::<C64>() * (k / x.len() as f64))
        .sum()
}

struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// angular wavenumbers `2πk/P` in FFT order
    k: Vec<f64>,
}

impl Spectral {
    fn new(m: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        let k = (0..m)
            .map(|i| {
                let ki = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
                2.0 * PI * ki / period
            })
            .collect();
        Self {
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
            k,
        }
    }

    /// Apply a Fourier multiplier to one periodic signal.
    fn multiply(&self, x: &mut [C64], mult: impl Fn(f64) -> C64) {
        let m = x.len() as f64;
        self.fwd.process(x);
        for (xi, &k) in x.iter_mut().zip(&self.k) {
            *xi *= mult(k) / m;
        }
        self.inv.process(x);
    }
}

/// Integrator and right-hand side for a fixed grid and collision threshold.
pub struct KmdSystem {
    spectral: Spectral,
    pub collision_threshold: f64,
}

impl KmdSystem {
    /// Threshold `COLLISION_FRACTION × min_separation(state)`.
    pub fn for_state(state: &FilamentEnsemble) -> Self {
        let t = if state.n_filaments() > 1 {
            COLLISION_FRACTION * state.min_separation()
        } else {
            0.0
        };
        Self::with_threshold(state, t)
    }

    pub fn with_threshold(state: &FilamentEnsemble, collision_threshold: f64) -> Self {
        Self {
            spectral: Spectral::new(state.n_samples(), state.axial_period),
            collision_threshold,
        }
    }

    pub fn rhs(&self, state: &FilamentEnsemble) -> Result<Vec<Vec<C64>>> {
        let mut out = self.interaction(&state.positions, &state.circulations)?;
        for (j, x) in state.positions.iter().enumerate() {
            let mut d2 = x.clone();
            self.spectral.multiply(&mut d2, |k| C64::new(-k * k, 0.0));
            let c = C64::new(0.0, state.core_constants[j] * state.circulations[j]);
            for (o, d) in out[j].iter_mut().zip(&d2) {
                *o += c * d;
            }
        }
        if out.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("kmd right-hand side"));
        }
        Ok(out)
    }

    fn interaction(&self, x: &[Vec<C64>], kappa: &[f64]) -> Result<Vec<Vec<C64>>> {
        let n = x.len();
        let m = x[0].len();
        let mut out = vec![vec![C64::new(0.0, 0.0); m]; n];
        for j in 0..n {
            for k in j + 1..n {
                for s in 0..m {
                    let d = x[j][s] - x[k][s];
                    let r2 = d.norm_sqr();
                    if r2.sqrt() <= self.collision_threshold || r2 == 0.0 {
                        return Err(Error::Collision {
                            j,
                            k,
                            m: s,
                            dist: r2.sqrt(),
                            threshold: self.collision_threshold,
                        });
                    }
                    let w = C64::new(0.0, 2.0) * d / r2;
                    out[j][s] += w * kappa[k];
                    out[k][s] -= w * kappa[j];
                }
            }
        }
        Ok(out)
    }

    fn linear_flow(&self, state: &mut FilamentEnsemble, tau: f64) {
        for (j, x) in state.positions.iter_mut().enumerate() {
            let ak = state.core_constants[j] * state.circulations[j];
            self.spectral.multiply(x, |k| C64::from_polar(1.0, -ak * k * k * tau));
        }
    }

    fn interaction_rk4(&self, state: &mut FilamentEnsemble, dt: f64) -> Result<()> {
        let kappa = &state.circulations;
        let x0 = &state.positions;
        let axpy = |a: &[Vec<C64>], b: &[Vec<C64>], c: f64| -> Vec<Vec<C64>> {
            a.iter()
                .zip(b)
                .map(|(u, v)| u.iter().zip(v).map(|(p, q)| p + q * c).collect())
                .collect()
        };
        let k1 = self.interaction(x0, kappa)?;
        let k2 = self.interaction(&axpy(x0, &k1, 0.5 * dt), kappa)?;
        let k3 = self.interaction(&axpy(x0, &k2, 0.5 * dt), kappa)?;
        let k4 = self.interaction(&axpy(x0, &k3, dt), kappa)?;
        let next = (0..x0.len())
            .map(|j| {
                (0..x0[j].len())
                    .map(|s| x0[j][s] + (k1[j][s] + (k2[j][s] + k3[j][s]) * 2.0 + k4[j][s]) * (dt / 6.0))
                    .collect()
            })
            .collect();
        state.positions = next;
        Ok(())
    }

    pub fn step(&self, state: &FilamentEnsemble, dt: f64) -> Result<FilamentEnsemble> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameters(format!("dt = {dt} must be positive")));
        }
        let mut next = state.clone();
        self.linear_flow(&mut next, 0.5 * dt);
        if next.n_filaments() > 1 {
            self.interaction_rk4(&mut next, dt)?;
        }
        self.linear_flow(&mut next, 0.5 * dt);
        next.time = state.time + dt;
        if next.positions.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("time step"));
        }
        Ok(next)
    }

    /// `⌈T/dt⌉` steps of equal size ending exactly at `t0 + T`; every
    /// `stride`-th state is recorded, plus the final one.
    pub fn simulate(&self, state: &FilamentEnsemble, t_final: f64, dt: f64, stride: usize) -> Result<Trajectory> {
        if !(t_final > 0.0) || !(dt > 0.0) || dt > t_final * (1.0 + 1e-12) {
            return Err(Error::InvalidParameters(format!("need 0 < dt <= T (dt = {dt}, T = {t_final})")));
        }
        let stride = stride.max(1);
        let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
        let h = t_final / steps as f64;
        let t0 = state.time;
        let mut snaps = vec![state.clone()];
        let mut cur = state.clone();
        for n in 1..=steps {
            cur = self.step(&cur, h)?;
            cur.time = t0 + n as f64 * h;
            if n % stride == 0 || n == steps {
                snaps.push(cur.clone());
            }
        }
        Ok(Trajectory {
            snapshots: snaps,
            dt: h,
            stride,
            scheme: "strang-spectral-rk4".into(),
        })
    }
}

pub fn kmd_rhs(state: &FilamentEnsemble) -> Result<Vec<Vec<C64>>> {
    KmdSystem::for_state(state).rhs(state)
}

pub fn step(state: &FilamentEnsemble, dt: f64) -> Result<FilamentEnsemble> {
    KmdSystem::for_state(state).step(state, dt)
}

pub fn simulate(state: &FilamentEnsemble, t_final: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    KmdSystem::for_state(state).simulate(state, t_final, dt, stride)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<FilamentEnsemble>,
    /// integrator step; snapshots are `stride` steps apart
    pub dt: f64,
    pub stride: usize,
    pub scheme: String,
}

impl Trajectory {
    pub fn from_snapshots(snapshots: Vec<FilamentEnsemble>, scheme: &str) -> Self {
        let dt = if snapshots.len() > 1 {
            snapshots[1].time - snapshots[0].time
        } else {
            0.0
        };
        Self {
            snapshots,
            dt,
            stride: 1,
            scheme: scheme.into(),
        }
    }

    pub fn last(&self) -> &FilamentEnsemble {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Rotation angle of filament `j` at each snapshot relative to the first,
    /// unwrapped from the phase of `⟨Xⱼ(tₙ), Xⱼ(tₙ₋₁)⟩`.
    pub fn phases(&self, j: usize) -> Vec<f64> {
        let mut phase = 0.0;
        let mut out = Vec::with_capacity(self.snapshots.len());
        out.push(0.0);
        for w in self.snapshots.windows(2) {
            let ip: C64 = w[1].positions[j]
                .iter()
                .zip(&w[0].positions[j])
                .map(|(a, b)| a * b.conj())
                .sum();
            phase += ip.arg();
            out.push(phase);
        }
        out
    }

    /// Mean angular velocity of filament `j`.
    pub fn angular_speed(&self, j: usize) -> f64 {
        let phase = *self.phases(j).last().expect("trajectory is never empty");
        phase / (self.last().time - self.snapshots[0].time)
    }

    /// Largest relative drift of the center of vorticity per unit time.
    pub fn center_drift_rate(&self) -> f64 {
        let c0 = center_of_vorticity(&self.snapshots[0]);
        let scale = self.snapshots[0].max_abs().max(f64::MIN_POSITIVE);
        let span = self.last().time - self.snapshots[0].time;
        self.snapshots
            .iter()
            .map(|s| (center_of_vorticity(s) - c0).norm())
            .fold(0.0, f64::max)
            / scale
            / span
    }

    /// CSV rows `t,j,m,s,re,im,phase`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,j,m,s,re,im,phase")?;
        let phases: Vec<Vec<f64>> = (0..self.snapshots[0].n_filaments()).map(|j| self.phases(j)).collect();
        for (n, snap) in self.snapshots.iter().enumerate() {
            for (j, x) in snap.positions.iter().enumerate() {
                for (m, z) in x.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        csv_float(snap.time),
                        j,
                        m,
                        csv_float(snap.s(m)),
                        csv_float(z.re),
                        csv_float(z.im),
                        csv_float(phases[j][n])
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn common_linear_coefficient(state: &FilamentEnsemble) -> Result<f64> {
    let c0 = state.core_constants[0] * state.circulations[0];
    for (a, k) in state.core_constants.iter().zip(&state.circulations) {
        if (a * k - c0).abs() > 1e-14 * c0.abs() {
            return Err(Error::InvalidTransform(format!(
                "alpha*kappa differs between filaments ({} vs {c0})",
                a * k
            )));
        }
    }
    Ok(c0)
}

/// `X̃ⱼ(s,t) = e^{−iκ₀ν²t} e^{isν} Xⱼ(s − 2κ₀νt, t)` at the state's own time,
/// with `κ₀` the common `αⱼκⱼ`. The shift is an exact Fourier phase, and
/// `ν` must fit the period (`νP/2π` an integer) so `e^{isν}` is periodic.
pub fn galilean_transform(state: &FilamentEnsemble, nu: f64) -> Result<FilamentEnsemble> {
    let k0 = common_linear_coefficient(state)?;
    let q = nu * state.axial_period / (2.0 * PI);
    if (q - q.round()).abs() > 1e-9 {
        return Err(Error::InvalidTransform(format!(
            "nu * period / 2pi = {q} is not an integer"
        )));
    }
    if nu == 0.0 {
        return Ok(state.clone());
    }
    let t = state.time;
    let shift = 2.0 * k0 * nu * t;
    let spectral = Spectral::new(state.n_samples(), state.axial_period);
    let mut out = state.clone();
    let global = C64::from_polar(1.0, -k0 * nu * nu * t);
    for x in out.positions.iter_mut() {
        spectral.multiply(x, |k| C64::from_polar(1.0, -k * shift));
        for (m, z) in x.iter_mut().enumerate() {
            let s = m as f64 * state.axial_period / state.n_samples() as f64;
            *z *= global * C64::from_polar(1.0, s * nu);
        }
    }
    Ok(out)
}

pub fn galilean_transform_trajectory(traj: &Trajectory, nu: f64) -> Result<Trajectory> {
    Ok(Trajectory {
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| galilean_transform(s, nu))
            .collect::<Result<_>>()?,
        dt: traj.dt,
        stride: traj.stride,
        scheme: traj.scheme.clone(),
    })
}

/// Max norm of `(X(tₙ₊₁) − X(tₙ₋₁))/(tₙ₊₁ − tₙ₋₁) − rhs(X(tₙ))` over the
/// interior snapshots.
pub fn kmd_residual(traj: &Trajectory) -> Result<f64> {
    let s = &traj.snapshots;
    if s.len() < 3 {
        return Err(Error::InvalidParameters("residual needs at least 3 snapshots".into()));
    }
    let sys = KmdSystem::with_threshold(&s[0], 0.0);
    let mut worst: f64 = 0.0;
    for n in 1..s.len() - 1 {
        let f = sys.rhs(&s[n])?;
        let dt = s[n + 1].time - s[n - 1].time;
        for j in 0..f.len() {
            for m in 0..f[j].len() {
                let d = (s[n + 1].positions[j][m] - s[n - 1].positions[j][m]) / dt;
                worst = worst.max((d - f[j][m]).norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polygon(n: usize, r: f64, m: usize) -> FilamentEnsemble {
        FilamentEnsemble::from_fn(n, m, 2.0 * PI, 2.0, 1.0, |j, _| {
            C64::from_polar(r, 2.0 * PI * j as f64 / n as f64)
        })
        .unwrap()
    }

    #[test]
    fn straight_single_filament_is_steady() {
        let e = FilamentEnsemble::from_fn(1, 16, 2.0 * PI, 2.0, 1.0, |_, _| C64::new(1.0, 0.0)).unwrap();
        let f = kmd_rhs(&e).unwrap();
        assert!(f[0].iter().all(|z| z.norm() < 1e-15));
        let next = step(&e, 0.1).unwrap();
        assert!(next.max_distance(&e) < 1e-15);
    }

    #[test]
    fn two_vortex_rhs_by_hand() {
        let e = FilamentEnsemble::from_fn(2, 8, 2.0 * PI, 2.0, 1.0, |j, _| {
            C64::new(if j == 0 { 0.5 } else { -0.5 }, 0.0)
        })
        .unwrap();
        let f = kmd_rhs(&e).unwrap();
        for m in 0..8 {
            assert!((f[0][m] - C64::new(0.0, 4.0)).norm() < 1e-14);
            assert!((f[1][m] - C64::new(0.0, -4.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn triangle_rhs_is_rigid_rotation() {
        let e = polygon(3, 1.0, 8);
        let f = kmd_rhs(&e).unwrap();
        for j in 0..3 {
            for m in 0..8 {
                let want = C64::new(0.0, 4.0) * e.positions[j][m];
                assert!((f[j][m] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_flow_is_exact_for_plane_wave() {
        let e = FilamentEnsemble::from_fn(1, 32, 2.0 * PI, 2.0, 1.0, |_, s| C64::from_polar(0.1, s)).unwrap();
        let next = step(&e, 0.01).unwrap();
        for m in 0..32 {
            let want = C64::from_polar(0.1, e.s(m)) * C64::from_polar(1.0, -0.02);
            assert!((next.positions[0][m] - want).norm() < 1e-16 * 10.0);
        }
    }

    #[test]
    fn polygon_step_advances_phase() {
        let e = polygon(3, 1.0, 8);
        let dt = 1e-2;
        let next = step(&e, dt).unwrap();
        for j in 0..3 {
            let z = next.positions[j][0] / e.positions[j][0];
            // RK4 local error is O((4dt)⁵)
            assert!((z.norm() - 1.0).abs() < 1e-8);
            assert!((z.arg() - 4.0 * dt).abs() < 1e-8);
        }
    }

    #[test]
    fn simulate_counts_snapshots() {
        let e = polygon(3, 1.0, 8);
        let tr = simulate(&e, 10.0 * 1e-3, 1e-3, 1).unwrap();
        assert_eq!(tr.snapshots.len(), 11);
        let tr = simulate(&e, 10.0 * 1e-3, 1e-3, 4).unwrap();
        assert_eq!(tr.snapshots.len(), 4);
        assert!((tr.last().time - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn separations_and_center() {
        let e = polygon(4, 1.0, 8);
        assert!((min_separation(&e) - 2f64.sqrt()).abs() < 1e-14);
        assert!(center_of_vorticity(&e).norm() < 1e-15);
        let one = polygon(1, 1.0, 8);
        assert_eq!(min_separation(&one), f64::INFINITY);
    }

    #[test]
    fn collisions_are_reported() {
        let mut e = FilamentEnsemble::from_fn(2, 8, 2.0 * PI, 2.0, 1.0, |j, _| {
            C64::new(if j == 0 { 0.5 } else { -0.5 }, 0.0)
        })
        .unwrap();
        e.positions[1][3] = e.positions[0][3] + C64::new(1e-12, 0.0);
        let sys = KmdSystem::with_threshold(&e, 1e-8);
        assert!(matches!(sys.rhs(&e), Err(Error::Collision { j: 0, k: 1, m: 3, .. })));
    }

    #[test]
    fn galilean_round_trip_and_validation() {
        let e = polygon(3, 1.0, 32);
        let g = galilean_transform(&e, 1.0).unwrap();
        let back = galilean_transform(&g, -1.0).unwrap();
        assert!(back.max_distance(&e) < 1e-14);
        assert!(galilean_transform(&e, 0.5).is_err());
        let mut bad = e.clone();
        bad.core_constants[1] = 2.0;
        assert!(matches!(galilean_transform(&bad, 1.0), Err(Error::InvalidTransform(_))));
    }
}
