//! The linearised Liouville operator `Δ + e^Γ` around `Γ(y) = log 8/(1+|y|²)²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::Adaptive;
use crate::numerics::solve_tridiagonal;
use crate::numerics::spline::CubicSpline;
use crate::stream::profile::bubble;
use crate::stream::residual::{inner_points, InnerEvaluator, A_INNER};
use crate::stream::StreamContext;

/// Bounded kernel elements: `Z₀ = 2(1−|y|²)/(1+|y|²)`, `Zᵢ = −4yᵢ/(1+|y|²)`.
pub fn kernel_z(j: usize, y: [f64; 2]) -> f64 {
    let d = 1.0 + y[0] * y[0] + y[1] * y[1];
    match j {
        0 => 2.0 * (2.0 - d) / d,
        1 => -4.0 * y[0] / d,
        2 => -4.0 * y[1] / d,
        _ => panic!("kernel index {j} out of range"),
    }
}

/// Radial factor `w` with `Z₀ = w₀(ρ)`, `Z₁ = w₁(ρ)cos θ`.
fn kernel_radial(k: usize, rho: f64) -> f64 {
    let d = 1.0 + rho * rho;
    if k == 0 {
        2.0 * (2.0 - d) / d
    } else {
        -4.0 * rho / d
    }
}

/// `φ₂ₒ(y) = (4/3)((|y|²−1)/(|y|²+1)) log(1+|y|²) − (8/3)/(|y|²+1)`.
pub fn phi2o(y: [f64; 2]) -> f64 {
    let t = y[0] * y[0] + y[1] * y[1];
    4.0 / 3.0 * (t - 1.0) / (t + 1.0) * t.ln_1p() - 8.0 / 3.0 / (t + 1.0)
}

/// `(γ₀, γ₁)` with `γⱼ⁻¹ = ∫ e^Γ Zⱼ²`.
pub fn gamma_constants() -> Result<(f64, f64)> {
    let q = Adaptive::default();
    // ρ = t/(1−t) maps [0,1) onto [0,∞)
    let radial = |f: &dyn Fn(f64) -> f64| {
        q.integrate(
            |t| {
                let r = t / (1.0 - t);
                f(r) * r / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            1.0,
        )
    };
    let i0 = 2.0 * PI * radial(&|r| bubble([r, 0.0]) * kernel_radial(0, r).powi(2))?;
    // ∫cos²θ = π
    let i1 = PI * radial(&|r| bubble([r, 0.0]) * kernel_radial(1, r).powi(2))?;
    Ok((1.0 / i0, 1.0 / i1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedOptions {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_radial: usize,
    pub n_angles: usize,
    /// Highest angular mode kept.
    pub max_mode: usize,
}

impl Default for ProjectedOptions {
    fn default() -> Self {
        Self {
            rho_min: 1e-6,
            rho_max: 1e4,
            n_radial: 4000,
            n_angles: 64,
            max_mode: 16,
        }
    }
}

/// Radial profiles of one angular mode on the log grid.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    pub k: usize,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProjectedSolution {
    /// `(d₀, d₁, d₂)`
    pub d: [f64; 3],
    /// `log ρ` nodes
    pub s: Vec<f64>,
    pub modes: Vec<ModeProfile>,
    splines: Vec<(usize, CubicSpline, CubicSpline)>,
}

impl ProjectedSolution {
    /// `φ(y)` for `ρ_min ≤ |y| ≤ ρ_max` (clamped at the ends).
    pub fn phi(&self, y: [f64; 2]) -> f64 {
        let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let s = rho.ln().clamp(self.s[0], *self.s.last().unwrap());
        let th = y[1].atan2(y[0]);
        self.splines
            .iter()
            .map(|(k, c, sn)| {
                let (si, co) = (*k as f64 * th).sin_cos();
                c.eval(s).0 * co + sn.eval(s).0 * si
            })
            .sum()
    }

    /// `max |φ|` over the radial nodes and the given number of angles.
    pub fn sup_norm(&self, n_angles: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..self.s.len() {
            for a in 0..n_angles {
                let th = (a as f64 + 0.5) * 2.0 * PI / n_angles as f64;
                let v: f64 = self
                    .modes
                    .iter()
                    .map(|m| {
                        let (si, co) = (m.k as f64 * th).sin_cos();
                        m.cos[i] * co + m.sin[i] * si
                    })
                    .sum();
                sup = sup.max(v.abs());
            }
        }
        sup
    }
}

/// Solves `Δφ + e^Γφ = −h + Σⱼ dⱼ e^Γ Zⱼ` on `ρ_min ≤ |y| ≤ ρ_max` with
/// `∫ φ e^Γ Zⱼ = 0`, one angular mode at a time.
///
/// On `s = log ρ` each mode `u` solves `u_ss + (ρ²e^Γ − k²)u = ρ²(−h_k + d e^Γ w_k)`,
/// discretised by Numerov. The ends carry the conditions of the regular
/// and of the decaying solution, `u_s = ±k u`. For the modes that contain a
/// kernel element the unknown `d` is eliminated together with the
/// orthogonality condition.
pub fn projected_solve(h: impl Fn([f64; 2]) -> f64 + Sync, opts: &ProjectedOptions) -> Result<ProjectedSolution> {
    if !(opts.rho_min > 0.0 && opts.rho_max > opts.rho_min) || opts.n_radial < 16 || opts.n_angles < 4 {
        return Err(Error::InvalidParameters(format!("bad projected-solve options {opts:?}")));
    }
    let n = opts.n_radial;
    let (s0, s1) = (opts.rho_min.ln(), opts.rho_max.ln());
    let ds = (s1 - s0) / (n - 1) as f64;
    // nodes −1..=n so that the ghost values exist
    let s_ext: Vec<f64> = (0..n + 2).map(|i| s0 + (i as f64 - 1.0) * ds).collect();
    let na = opts.n_angles;
    let kmax = opts.max_mode.min(na / 2 - 1);
    let theta: Vec<f64> = (0..na).map(|a| (a as f64 + 0.5) * 2.0 * PI / na as f64).collect();

    // angular coefficients h = a₀ + Σ (a_k cos kθ + b_k sin kθ)
    let coeffs: Vec<Vec<(f64, f64)>> = s_ext
        .par_iter()
        .map(|&s| {
            let rho = s.exp();
            let vals: Vec<f64> = theta.iter().map(|t| h([rho * t.cos(), rho * t.sin()])).collect();
            (0..=kmax)
                .map(|k| {
                    let f = if k == 0 { 1.0 } else { 2.0 } / na as f64;
                    let (mut a, mut b) = (0.0, 0.0);
                    for (v, t) in vals.iter().zip(&theta) {
                        let (si, co) = (k as f64 * t).sin_cos();
                        a += v * co;
                        b += v * si;
                    }
                    (f * a, f * b)
                })
                .collect()
        })
        .collect();
    if coeffs.iter().flatten().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::NonFinite("projected-solve source"));
    }
    check_decay(&h, opts)?;

    let rho_ext: Vec<f64> = s_ext.iter().map(|s| s.exp()).collect();
    let eg: Vec<f64> = rho_ext.iter().map(|&r| bubble([r, 0.0])).collect();
    // trapezoid weights of ∫ u e^Γ w ρ² ds on the interior nodes
    let trap = |i: usize| if i == 0 || i + 1 == n { 0.5 * ds } else { ds };

    let solve_mode = |k: usize, src: &dyn Fn(usize) -> f64| -> Result<(Vec<f64>, f64)> {
        let kf = k as f64;
        let f: Vec<f64> = (0..n + 2).map(|i| kf * kf - rho_ext[i] * rho_ext[i] * eg[i]).collect();
        let g_h: Vec<f64> = (0..n + 2).map(|i| -rho_ext[i] * rho_ext[i] * src(i)).collect();
        let sys_h = NumerovSystem::new(&f, &g_h, ds, kf, -kf);
        if k > 1 {
            return Ok((sys_h.solve(), 0.0));
        }
        // With both end conditions the kernel mode is (nearly) singular: pin
        // u at a node where the kernel is large, fix d by the dropped row and
        // add the discrete kernel for orthogonality.
        let m = (0..n)
            .filter(|&i| (0.1..=10.0).contains(&rho_ext[i + 1]))
            .max_by(|&a, &b| {
                kernel_radial(k, rho_ext[a + 1]).abs().total_cmp(&kernel_radial(k, rho_ext[b + 1]).abs())
            })
            .unwrap_or(n / 2);
        let g_w: Vec<f64> = (0..n + 2)
            .map(|i| rho_ext[i] * rho_ext[i] * eg[i] * kernel_radial(k, rho_ext[i]))
            .collect();
        let sys_w = NumerovSystem::new(&f, &g_w, ds, kf, -kf);
        let zero = vec![0.0; n];
        let u_h = sys_h.solve_pinned(m, 0.0, &sys_h.r);
        let u_w = sys_w.solve_pinned(m, 0.0, &sys_w.r);
        let v = sys_h.solve_pinned(m, 1.0, &zero);
        let (res_h, res_w) = (sys_h.row_residual(m, &u_h, &sys_h.r), sys_w.row_residual(m, &u_w, &sys_w.r));
        if res_w == 0.0 || !res_w.is_finite() {
            return Err(Error::OdeSolveFailure(format!("degenerate solvability condition in mode {k}")));
        }
        let d = -res_h / res_w;
        let u: Vec<f64> = u_h.iter().zip(&u_w).map(|(a, b)| a + d * b).collect();
        let c = |u: &[f64]| -> f64 {
            (0..n)
                .map(|i| {
                    let r = rho_ext[i + 1];
                    trap(i) * u[i] * eg[i + 1] * kernel_radial(k, r) * r * r
                })
                .sum()
        };
        let cv = c(&v);
        if cv == 0.0 || !cv.is_finite() {
            return Err(Error::OdeSolveFailure(format!("degenerate orthogonality condition in mode {k}")));
        }
        let t = -c(&u) / cv;
        Ok((u.iter().zip(&v).map(|(a, b)| a + t * b).collect(), d))
    };

    let results: Vec<Result<(ModeProfile, [f64; 3])>> = (0..=kmax)
        .into_par_iter()
        .map(|k| {
            let (uc, dc) = solve_mode(k, &|i| coeffs[i][k].0)?;
            let (us, ds_) = if k == 0 { (vec![0.0; n], 0.0) } else { solve_mode(k, &|i| coeffs[i][k].1)? };
            let mut d = [0.0; 3];
            if k == 0 {
                d[0] = dc;
            } else if k == 1 {
                d[1] = dc;
                d[2] = ds_;
            }
            Ok((ModeProfile { k, cos: uc, sin: us }, d))
        })
        .collect();
    let mut d = [0.0; 3];
    let mut modes = Vec::with_capacity(kmax + 1);
    for r in results {
        let (m, dm) = r?;
        if m.cos.iter().chain(&m.sin).any(|v| !v.is_finite()) {
            return Err(Error::OdeSolveFailure(format!("mode {} is not finite", m.k)));
        }
        for j in 0..3 {
            d[j] += dm[j];
        }
        modes.push(m);
    }
    let s: Vec<f64> = s_ext[1..=n].to_vec();
    let splines = modes
        .iter()
        .map(|m| (m.k, CubicSpline::new(s.clone(), m.cos.clone()), CubicSpline::new(s.clone(), m.sin.clone())))
        .collect();
    Ok(ProjectedSolution { d, s, modes, splines })
}

/// Numerov for `u'' = f u + g` on nodes `0..n` (arrays carry one ghost node
/// at each end), with `u' = β₀u` at the first and `u' = β₁u` at the last node.
struct NumerovSystem {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    r: Vec<f64>,
}

impl NumerovSystem {
    fn new(f: &[f64], g: &[f64], ds: f64, beta0: f64, beta1: f64) -> Self {
        let n = f.len() - 2;
        let c = ds * ds / 12.0;
        let a = |i: usize| 1.0 - c * f[i];
        let b = |i: usize| -2.0 * (1.0 + 5.0 * c * f[i]);
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut r = vec![0.0; n];
        for j in 0..n {
            let i = j + 1;
            sub[j] = a(i - 1);
            diag[j] = b(i);
            sup[j] = a(i + 1);
            r[j] = c * (g[i - 1] + 10.0 * g[i] + g[i + 1]);
        }
        // ghosts exact for e^{βs}: u₋₁ = u₁ − 2 sinh(β₀ds) u₀, u_n = u_{n−2} + 2 sinh(β₁ds) u_{n−1}
        let t0 = 2.0 * (beta0 * ds).sinh();
        diag[0] -= t0 * sub[0];
        sup[0] += sub[0];
        let t1 = 2.0 * (beta1 * ds).sinh();
        diag[n - 1] += t1 * sup[n - 1];
        sub[n - 1] += sup[n - 1];
        Self { sub, diag, sup, r }
    }

    fn solve(&self) -> Vec<f64> {
        solve_tridiagonal(&self.sub, &self.diag, &self.sup, &self.r)
    }

    /// Solves every row except `m` with `u_m = value` and right-hand side `r`.
    fn solve_pinned(&self, m: usize, value: f64, r: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut u = vec![0.0; n];
        u[m] = value;
        if m > 0 {
            let mut rl = r[..m].to_vec();
            rl[m - 1] -= self.sup[m - 1] * value;
            u[..m].copy_from_slice(&solve_tridiagonal(&self.sub[..m], &self.diag[..m], &self.sup[..m], &rl));
        }
        if m + 1 < n {
            let mut rr = r[m + 1..].to_vec();
            rr[0] -= self.sub[m + 1] * value;
            let part = solve_tridiagonal(&self.sub[m + 1..], &self.diag[m + 1..], &self.sup[m + 1..], &rr);
            u[m + 1..].copy_from_slice(&part);
        }
        u
    }

    fn row_residual(&self, m: usize, u: &[f64], r: &[f64]) -> f64 {
        let mut v = self.diag[m] * u[m] - r[m];
        if m > 0 {
            v += self.sub[m] * u[m - 1];
        }
        if m + 1 < u.len() {
            v += self.sup[m] * u[m + 1];
        }
        v
    }
}

/// Fitted decay exponent of `sup_θ |h|` over the outer decade of the disk.
pub fn decay_exponent(h: &(impl Fn([f64; 2]) -> f64 + Sync), opts: &ProjectedOptions) -> Option<f64> {
    let lo = (opts.rho_max / 100.0).max(10.0);
    if lo >= opts.rho_max {
        return None;
    }
    let sup_at = |r: f64| {
        (0..32)
            .map(|a| {
                let t = (a as f64 + 0.5) * 2.0 * PI / 32.0;
                h([r * t.cos(), r * t.sin()]).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let r = lo * (opts.rho_max / lo).powf(i as f64 / 20.0);
            (r.ln(), sup_at(r))
        })
        .collect();
    if pts.iter().any(|p| p.1 < 1e-250) {
        // compactly supported or effectively so
        return None;
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Some(-crate::numerics::fit_slope(&x, &y))
}

fn check_decay(h: &(impl Fn([f64; 2]) -> f64 + Sync), opts: &ProjectedOptions) -> Result<()> {
    match decay_exponent(h, opts) {
        Some(m) if m <= 2.0 => Err(Error::SlowDecay(m)),
        _ => Ok(()),
    }
}

/// `γⱼ ∫ h Zⱼ` over the disk `|y| ≤ rho_max`, the leading-order prediction
/// of `dⱼ`.
pub fn projection_estimate(h: impl Fn([f64; 2]) -> f64 + Sync, j: usize, rho_max: f64) -> Result<f64> {
    let (g0, g1) = gamma_constants()?;
    let na = 128;
    let q = Adaptive::default();
    let integral = q.integrate(
        |t| {
            let rho = t.exp_m1();
            let ang: f64 = (0..na)
                .map(|a| {
                    let th = (a as f64 + 0.5) * 2.0 * PI / na as f64;
                    let y = [rho * th.cos(), rho * th.sin()];
                    h(y) * kernel_z(j, y)
                })
                .sum::<f64>()
                * 2.0
                * PI
                / na as f64;
            ang * rho * (1.0 + rho)
        },
        0.0,
        rho_max.ln_1p(),
    )?;
    Ok(if j == 0 { g0 } else { g1 } * integral)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BEpsReport {
    /// `sup |b_ε|(1+|y|^{2+a}) / (εμ√|log ε|)`
    pub constant: f64,
    pub sup: f64,
    /// Largest `|b_ε(y₁,y₂) − b_ε(y₁,−y₂)|` over the samples.
    pub mirror_defect: f64,
}

/// `b_ε = ε²μ²F'(V) − e^Γ` on the first inner region.
pub fn b_eps(y: [f64; 2], ctx: &StreamContext) -> f64 {
    InnerEvaluator::new(ctx).sample(y).b
}

pub fn b_eps_bound_check(ctx: &StreamContext) -> BEpsReport {
    let ev = InnerEvaluator::new(ctx);
    let scale = ctx.em * ctx.log_eps.sqrt();
    let vals: Vec<(f64, f64, f64)> = inner_points(ctx, 400, 64)
        .par_iter()
        .map(|&y| {
            let b = ev.sample(y).b;
            let bm = ev.sample([y[0], -y[1]]).b;
            let w = 1.0 + (y[0] * y[0] + y[1] * y[1]).sqrt().powf(2.0 + A_INNER);
            (b.abs() * w / scale, b.abs(), (b - bm).abs())
        })
        .collect();
    let f = |sel: fn(&(f64, f64, f64)) -> f64| vals.iter().map(sel).fold(0.0f64, f64::max);
    BEpsReport {
        constant: f(|v| v.0),
        sup: f(|v| v.1),
        mirror_defect: f(|v| v.2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fourth-order five-point-per-axis Laplacian.
    fn fd_lap(f: impl Fn([f64; 2]) -> f64, y: [f64; 2], s: f64) -> f64 {
        let axis = |e: [f64; 2]| {
            let g = |k: f64| f([y[0] + k * s * e[0], y[1] + k * s * e[1]]);
            (-g(2.0) + 16.0 * g(1.0) - 30.0 * g(0.0) + 16.0 * g(-1.0) - g(-2.0)) / (12.0 * s * s)
        };
        axis([1.0, 0.0]) + axis([0.0, 1.0])
    }

    #[test]
    fn kernel_values_and_parity() {
        assert_eq!(kernel_z(0, [0.0, 0.0]), 2.0);
        let y = [0.7, -1.3];
        assert_eq!(kernel_z(1, [-y[0], y[1]]), -kernel_z(1, y));
        assert_eq!(kernel_z(1, [y[0], -y[1]]), kernel_z(1, y));
        assert!((kernel_z(0, [1e4, 0.0]) + 2.0).abs() < 1e-7);
    }

    #[test]
    fn kernel_solves_linearised_equation() {
        for j in 0..3 {
            for y in [[0.3, 0.4], [-1.2, 0.7], [2.5, -3.0]] {
                let r = fd_lap(|p| kernel_z(j, p), y, 1e-3) + bubble(y) * kernel_z(j, y);
                assert!(r.abs() < 1e-6, "j={j} {r}");
            }
        }
    }

    #[test]
    fn phi2o_properties() {
        assert!((phi2o([0.0, 0.0]) + 8.0 / 3.0).abs() < 1e-15);
        let y = [1e3, 0.0];
        assert!((phi2o(y) / (1e6f64).ln_1p() - 4.0 / 3.0).abs() < 1e-3);
        for d0 in [1.0, -3.7] {
            for y in [[0.3, 0.4], [-1.2, 0.7], [2.0, 2.0]] {
                let r = fd_lap(|p| d0 * phi2o(p), y, 1e-3) + bubble(y) * (d0 * phi2o(y) + d0 * kernel_z(0, y));
                assert!(r.abs() < 1e-6 * d0.abs(), "{r}");
            }
        }
    }

    #[test]
    fn gamma_constants_match_closed_form() {
        let (g0, g1) = gamma_constants().unwrap();
        let want = 3.0 / (32.0 * PI);
        assert!((g0 - want).abs() < 1e-10 && (g1 - want).abs() < 1e-10, "{g0} {g1}");
    }

    #[test]
    fn kernel_source_is_absorbed() {
        let sol = projected_solve(|y| bubble(y) * kernel_z(1, y), &ProjectedOptions::default()).unwrap();
        assert!((sol.d[1] - 1.0).abs() < 1e-6, "{:?}", sol.d);
        assert!(sol.d[0].abs() < 1e-6 && sol.d[2].abs() < 1e-6);
        assert!(sol.sup_norm(16) < 1e-6, "{}", sol.sup_norm(16));
    }

    #[test]
    fn compact_source_matches_projection_formula() {
        let cut = |r: f64| if r < 5.0 { (1.0 - (r / 5.0).powi(2)).powi(4) } else { 0.0 };
        let h = move |y: [f64; 2]| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            cut(r) * (1.0 + y[0] + 0.5 * y[0] * y[1] - 0.3 * y[1])
        };
        let sol = projected_solve(h, &ProjectedOptions::default()).unwrap();
        for j in 0..3 {
            let want = projection_estimate(h, j, 5.0).unwrap();
            assert!((sol.d[j] - want).abs() < 1e-6, "j={j} {} {want}", sol.d[j]);
        }
        // residual of the equation away from the ends, by differences
        let y = [0.8, 0.3];
        let s = 1e-3;
        let lhs = fd_lap(|p| sol.phi(p), y, s) + bubble(y) * sol.phi(y);
        let rhs = -h(y) + (0..3).map(|j| sol.d[j] * bubble(y) * kernel_z(j, y)).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} {rhs}");
    }

    #[test]
    fn even_source_has_no_odd_projection() {
        let h = |y: [f64; 2]| (1.0 + y[0]) / (1.0 + y[0] * y[0] + y[1] * y[1]).powi(2);
        let sol = projected_solve(h, &ProjectedOptions::default()).unwrap();
        assert!(sol.d[2].abs() < 1e-12);
    }

    #[test]
    fn slow_decay_is_rejected() {
        let h = |y: [f64; 2]| 1.0 / (1.0 + y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!(matches!(projected_solve(h, &ProjectedOptions::default()), Err(Error::SlowDecay(_))));
    }
}
