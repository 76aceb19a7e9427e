//! Solver for `∇·(K∇H) = −g` on a truncated disk.
//!
//! In polar coordinates `K e_ρ = a e_ρ` with `a = h²/(h²+ρ²)` and `K e_θ = e_θ`,
//! so the operator separates:
//! `∇·(K∇u) = (1/ρ)∂_ρ(ρ a ∂_ρ u) + ∂_θ²u/ρ²`.
//! Each angular mode is a finite-volume two-point problem on a cell-centred
//! radial grid. Mode 0 is integrated directly from the flux (this keeps the
//! admissible `ρ²` growth); modes `m ≥ 1` use the decaying far-field solution
//! `ρK₁(mρ/h)` as a Robin condition.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarGrid};
use crate::numerics::bessel::k0_over_k1;
use crate::numerics::spline::CubicSpline;
use crate::numerics::{solve_tridiagonal, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H2Grid {
    pub radius: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for H2Grid {
    fn default() -> Self {
        Self {
            radius: 20.0,
            n_rho: 512,
            n_theta: 256,
        }
    }
}

impl H2Grid {
    /// Cheap grid for tests and quick runs.
    pub fn coarse() -> Self {
        Self {
            radius: 20.0,
            n_rho: 192,
            n_theta: 96,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 2.0) || self.n_rho < 32 || self.n_theta < 8 {
            return Err(Error::InvalidParameters(format!(
                "H2 grid needs radius > 2, n_rho >= 32, n_theta >= 8 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Cell centres: three quarters uniform on `[0, 1.25]`, then cells
    /// growing geometrically so that the last centre sits at `radius`.
    pub fn radii(&self) -> Vec<f64> {
        let n_u = 3 * self.n_rho / 4;
        let dr = 1.25 / n_u as f64;
        let mut rho: Vec<f64> = (0..n_u).map(|i| (i as f64 + 0.5) * dr).collect();
        let n_g = self.n_rho - n_u;
        let span = self.radius - rho[n_u - 1];
        // Σ_{k=1..n_g} dr·q^k = span
        let total = |q: f64| (1..=n_g).map(|k| dr * q.powi(k as i32)).sum::<f64>();
        let (mut lo, mut hi) = (1.0, 2.0);
        while total(hi) < span {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < span {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        for k in 1..=n_g {
            let last = *rho.last().unwrap();
            rho.push(last + dr * q.powi(k as i32));
        }
        *rho.last_mut().unwrap() = self.radius;
        rho
    }

    /// Angular resolution rounded up to a multiple of `2N`.
    pub fn n_theta_for(&self, n: usize) -> usize {
        self.n_theta.div_ceil(2 * n) * 2 * n
    }
}

/// One nonzero angular mode: `u = c_m Re(û_m(ρ) e^{imθ})`.
#[derive(Debug, Clone)]
struct Mode {
    m: usize,
    re: CubicSpline,
    im: CubicSpline,
}

/// `H₂ε` as a sum of angular modes with spline radial profiles.
#[derive(Debug, Clone)]
pub struct H2Field {
    modes: Vec<Mode>,
    offset: f64,
    radii: Vec<f64>,
    n_theta: usize,
    /// Largest sampled `|g|`.
    pub source_max: f64,
}

impl H2Field {
    pub fn zero(_n: usize) -> Self {
        Self {
            modes: Vec::new(),
            offset: 0.0,
            radii: Vec::new(),
            n_theta: 0,
            source_max: 0.0,
        }
    }

    /// Solve `∇·(K∇H) = −g` and shift so that `H(anchor) = 0`.
    pub fn solve(g: impl Fn([f64; 2]) -> f64 + Sync, h: f64, n_sym: usize, grid: &H2Grid, anchor: [f64; 2]) -> Result<Self> {
        grid.validate()?;
        let rho = grid.radii();
        let nr = rho.len();
        let nt = grid.n_theta_for(n_sym.max(1));
        let dth = std::f64::consts::TAU / nt as f64;
        let samples: Vec<f64> = (0..nr * nt)
            .into_par_iter()
            .map(|idx| {
                let r = rho[idx / nt];
                let th = ((idx % nt) as f64 + 0.5) * dth;
                g([r * th.cos(), r * th.sin()])
            })
            .collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("H2 source"));
        }
        let source_max = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        // G_m(ρ_i) = (1/nθ) Σ_k g_ik e^{−imθ_k}
        let fft = FftPlanner::<f64>::new().plan_fft_forward(nt);
        let n_modes = nt / 2;
        let mut coeff = vec![vec![Complex64::new(0.0, 0.0); nr]; n_modes];
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..nr {
            for k in 0..nt {
                buf[k] = Complex64::new(samples[i * nt + k], 0.0);
            }
            fft.process(&mut buf);
            for (m, row) in coeff.iter_mut().enumerate() {
                row[i] = buf[m] * Complex64::from_polar(1.0 / nt as f64, -(m as f64) * 0.5 * dth);
            }
        }

        // face geometry
        let faces: Vec<f64> = (0..nr - 1).map(|i| 0.5 * (rho[i] + rho[i + 1])).collect();
        let width: Vec<f64> = (0..nr)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { faces[i - 1] };
                let hi = if i + 1 < nr { faces[i] } else { rho[nr - 1] + (rho[nr - 1] - faces[nr - 2]) };
                hi - lo
            })
            .collect();
        let a = |r: f64| h * h / (h * h + r * r);
        let cond: Vec<f64> = (0..nr - 1).map(|i| faces[i] * a(faces[i]) / (rho[i + 1] - rho[i])).collect();

        let threshold = 1e-13 * coeff.iter().flatten().fold(0.0f64, |acc, c| acc.max(c.norm())).max(1e-300);
        let solved: Vec<Option<(usize, Vec<f64>, Vec<f64>)>> = (0..n_modes)
            .into_par_iter()
            .map(|m| {
                let gm = &coeff[m];
                if m > 0 && gm.iter().all(|c| c.norm() <= threshold) {
                    return None;
                }
                let re: Vec<f64> = gm.iter().map(|c| c.re).collect();
                let im: Vec<f64> = gm.iter().map(|c| c.im).collect();
                if m == 0 {
                    Some((0, integrate_mode0(&re, &rho, &width, &cond), vec![0.0; nr]))
                } else {
                    let mf = m as f64;
                    let rb = rho[nr - 1];
                    let robin = -(mf / h) * k0_over_k1(mf * rb / h);
                    let mut sub = vec![0.0; nr];
                    let mut diag = vec![0.0; nr];
                    let mut sup = vec![0.0; nr];
                    for i in 0..nr {
                        let w = rho[i] * width[i];
                        if i > 0 {
                            sub[i] = cond[i - 1] / w;
                            diag[i] -= cond[i - 1] / w;
                        }
                        if i + 1 < nr {
                            sup[i] = cond[i] / w;
                            diag[i] -= cond[i] / w;
                        } else {
                            // outgoing flux ρ a u' with u' = robin·u
                            diag[i] += rb * a(rb) * robin / w;
                        }
                        diag[i] -= mf * mf / (rho[i] * rho[i]);
                    }
                    let neg = |v: &Vec<f64>| v.iter().map(|x| -x).collect::<Vec<_>>();
                    let ur = solve_tridiagonal(&sub, &diag, &sup, &neg(&re));
                    let ui = solve_tridiagonal(&sub, &diag, &sup, &neg(&im));
                    Some((m, ur, ui))
                }
            })
            .collect();

        let mut modes = Vec::new();
        for (m, ur, ui) in solved.into_iter().flatten() {
            if ur.iter().chain(&ui).any(|v| !v.is_finite()) {
                return Err(Error::SolverDivergence(format!("mode {m} produced non-finite values")));
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mirror = |v: &[f64]| -> Vec<f64> { v.iter().rev().map(|x| sign * x).chain(v.iter().copied()).collect() };
            let nodes: Vec<f64> = rho.iter().rev().map(|r| -r).chain(rho.iter().copied()).collect();
            modes.push(Mode {
                m,
                re: CubicSpline::new(nodes.clone(), mirror(&ur)),
                im: CubicSpline::new(nodes, mirror(&ui)),
            });
        }
        let mut field = Self {
            modes,
            offset: 0.0,
            radii: rho,
            n_theta: nt,
            source_max,
        };
        field.offset = field.eval(anchor);
        Ok(field)
    }

    pub fn radius(&self) -> f64 {
        self.radii.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Polar partials `(u, u_ρ, u_θ, u_ρρ, u_ρθ, u_θθ)`.
    fn polar(&self, r: f64, th: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for md in &self.modes {
            let (ar, ar1, ar2) = md.re.eval(r);
            let (ai, ai1, ai2) = md.im.eval(r);
            let mf = md.m as f64;
            let c = if md.m == 0 { 1.0 } else { 2.0 };
            let (s, co) = (mf * th).sin_cos();
            // Re((A + iB)e^{imθ}) = A cos − B sin
            out[0] += c * (ar * co - ai * s);
            out[1] += c * (ar1 * co - ai1 * s);
            out[3] += c * (ar2 * co - ai2 * s);
            out[2] += c * mf * (-ar * s - ai * co);
            out[4] += c * mf * (-ar1 * s - ai1 * co);
            out[5] -= c * mf * mf * (ar * co - ai * s);
        }
        out
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        if self.modes.is_empty() {
            return 0.0;
        }
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let th = x[1].atan2(x[0]);
        self.polar(r, th)[0] - self.offset
    }

    /// Value, gradient and Hessian at `x` (not at the origin itself).
    pub fn jet(&self, x: [f64; 2]) -> Jet {
        if self.modes.is_empty() {
            return Jet::ZERO;
        }
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt().max(1e-12);
        let th = x[1].atan2(x[0]);
        let [u, ur, ut, urr, urt, utt] = self.polar(r, th);
        let (s, c) = th.sin_cos();
        let r2 = r * r;
        Jet::new(
            u - self.offset,
            [c * ur - s * ut / r, s * ur + c * ut / r],
            [
                c * c * urr - 2.0 * s * c * urt / r + s * s * utt / r2 + s * s * ur / r + 2.0 * s * c * ut / r2,
                s * c * urr + (c * c - s * s) * urt / r - s * c * utt / r2 - s * c * ur / r - (c * c - s * s) * ut / r2,
                s * s * urr + 2.0 * s * c * urt / r + c * c * utt / r2 + c * c * ur / r - 2.0 * s * c * ut / r2,
            ],
        )
    }

    /// Values on the solver's own polar nodes.
    pub fn to_grid(&self) -> Result<ScalarGrid> {
        let geom = GridGeometry::Polar {
            radii: self.radii.clone(),
            n_theta: self.n_theta.max(1),
            offset: 0.5,
        };
        ScalarGrid::sample(geom, |x| self.eval(x))
    }
}

/// Mode 0: `F_{i+½} = F_{i−½} − g_i ρ_i w_i`, `u_{i+1} = u_i + F_{i+½}/c_{i+½}`.
fn integrate_mode0(g: &[f64], rho: &[f64], width: &[f64], cond: &[f64]) -> Vec<f64> {
    let n = rho.len();
    let mut u = vec![0.0; n];
    let mut flux = 0.0;
    for i in 0..n - 1 {
        flux -= g[i] * rho[i] * width[i];
        u[i + 1] = u[i] + flux / cond[i];
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helical::div_k_grad;

    const H: f64 = 1.0;

    fn bump(x: [f64; 2]) -> Jet {
        // exp(−|x−c|²/s²) with c off-centre, so every mode is excited
        let c = [0.3, 0.1];
        let s2 = 0.04;
        let d = Jet::norm_sq([x[0] - c[0], x[1] - c[1]]);
        let e = (-d.v / s2).exp();
        d.compose(e, -e / s2, e / (s2 * s2))
    }

    #[test]
    fn zero_source_gives_zero() {
        let f = H2Field::solve(|_| 0.0, H, 3, &H2Grid::coarse(), [0.3, 0.0]).unwrap();
        for x in [[0.1, 0.2], [3.0, -1.0]] {
            assert!(f.eval(x).abs() < 1e-300);
        }
    }

    #[test]
    fn radial_grid_shape() {
        let g = H2Grid::default();
        let r = g.radii();
        assert_eq!(r.len(), 512);
        assert!((r[511] - 20.0).abs() < 1e-12);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.n_theta_for(3), 258);
    }

    #[test]
    fn recovers_manufactured_solution() {
        let grid = H2Grid {
            radius: 20.0,
            n_rho: 384,
            n_theta: 128,
        };
        let anchor = [0.25, 0.0];
        let f = H2Field::solve(|x| -div_k_grad(&bump(x), x, H), H, 1, &grid, anchor).unwrap();
        let b0 = bump(anchor).v;
        let mut err: f64 = 0.0;
        for x in [[0.3, 0.1], [0.0, 0.0], [0.5, -0.2], [-0.4, 0.3], [2.0, 1.0]] {
            err = err.max((f.eval(x) - (bump(x).v - b0)).abs());
        }
        assert!(err < 2e-4, "{err}");
        // the interpolated jet satisfies the equation away from the grid ends
        for x in [[0.35, 0.05], [0.1, 0.25]] {
            let res = div_k_grad(&f.jet(x), x, H) - div_k_grad(&bump(x), x, H);
            assert!(res.abs() < 5e-2 * f.source_max, "{res}");
        }
    }

    #[test]
    fn polar_jet_matches_differences() {
        let grid = H2Grid::coarse();
        let f = H2Field::solve(|x| -div_k_grad(&bump(x), x, H), H, 1, &grid, [0.25, 0.0]).unwrap();
        let x = [0.4, 0.3];
        let j = f.jet(x);
        let s = 1e-4;
        let e = |dx: f64, dy: f64| f.eval([x[0] + dx, x[1] + dy]);
        assert!((j.g[0] - (e(s, 0.0) - e(-s, 0.0)) / (2.0 * s)).abs() < 1e-6);
        assert!((j.g[1] - (e(0.0, s) - e(0.0, -s)) / (2.0 * s)).abs() < 1e-6);
        let hxy = (e(s, s) - e(s, -s) - e(-s, s) + e(-s, -s)) / (4.0 * s * s);
        assert!((j.h[1] - hxy).abs() < 1e-3 * j.h[1].abs().max(1.0));
    }
}
