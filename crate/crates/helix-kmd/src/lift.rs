//! Helical lift of a planar vorticity to a 3D vector field, its structural
//! checks, and the comparison with vortex lines along the helices.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helical::Matrix2;
use crate::numerics::quad::composite_gl;
use crate::numerics::smoothstep;
use crate::stream::residual::{vorticity, InnerEvaluator};
use crate::stream::StreamContext;

pub type Vec3 = [f64; 3];

/// Mass carried by each vortex line.
pub const LINE_WEIGHT: f64 = 8.0 * PI;

/// `ω(x) = w(Q_{−x₃/h}x′)·((1/h)Q_{π/2}x′, 1)`.
pub fn lift_vorticity(w: impl Fn([f64; 2]) -> f64, x: Vec3, h: f64) -> Vec3 {
    let xi = Matrix2::rotation(-x[2] / h).apply([x[0], x[1]]);
    let v = w(xi);
    [-v * x[1] / h, v * x[0] / h, v]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LiftedFromW,
    Analytic,
}

pub struct VectorField3 {
    eval: Box<dyn Fn(Vec3) -> Vec3 + Send + Sync>,
    pub provenance: Provenance,
}

impl VectorField3 {
    pub fn analytic(f: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        Self {
            eval: Box::new(f),
            provenance: Provenance::Analytic,
        }
    }

    pub fn lifted(w: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static, h: f64) -> Self {
        Self {
            eval: Box::new(move |x| lift_vorticity(&w, x, h)),
            provenance: Provenance::LiftedFromW,
        }
    }

    pub fn eval(&self, x: Vec3) -> Vec3 {
        (self.eval)(x)
    }
}

/// Axis-aligned box sampled with `n` points per axis (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBox {
    pub lo: Vec3,
    pub hi: Vec3,
    pub n: usize,
}

impl SampleBox {
    pub fn cube(half: f64, n: usize) -> Self {
        Self {
            lo: [-half; 3],
            hi: [half; 3],
            n,
        }
    }

    pub fn around(center: Vec3, half: f64, n: usize) -> Self {
        Self {
            lo: center.map(|c| c - half),
            hi: center.map(|c| c + half),
            n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n >= 2 && (0..3).all(|k| self.lo[k].is_finite() && self.hi[k].is_finite() && self.hi[k] > self.lo[k]);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!("bad sample box {self:?}")))
        }
    }

    pub fn points(&self) -> Vec<Vec3> {
        let n = self.n;
        let c = |k: usize, i: usize| self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (n - 1) as f64;
        let mut pts = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    pts.push([c(0, i), c(1, j), c(2, k)]);
                }
            }
        }
        pts
    }
}

/// Symmetry defect on a box of half-width `3εμ` around the first filament
/// at `x₃ = 0`, relative to the largest `|ω⃗|` there.
pub fn core_symmetry_defect(ctx: &StreamContext, rho: f64) -> f64 {
    let p = ctx.frames[0].p;
    let b = SampleBox::around([p[0], p[1], 0.0], 3.0 * ctx.em, 9);
    let h = ctx.params.h;
    let field = stream_vorticity_field(ctx.clone());
    let scale = b
        .points()
        .iter()
        .map(|&x| norm3(field.eval(x)))
        .fold(0.0, f64::max);
    helical_symmetry_defect(&field, rho, h, &b) / scale
}

fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `ω⃗` lifted from the planar vorticity `w = F(V)` of a built stream function.
pub fn stream_vorticity_field(ctx: StreamContext) -> VectorField3 {
    let h = ctx.params.h;
    VectorField3::lifted(move |x| vorticity(x, &ctx), h)
}

/// `S_ρx = (Q_ρx′, x₃ + hρ)`.
pub fn screw(x: Vec3, rho: f64, h: f64) -> Vec3 {
    let p = Matrix2::rotation(rho).apply([x[0], x[1]]);
    [p[0], p[1], x[2] + h * rho]
}

/// `R_ρv`: rotation of the first two components.
pub fn rotate3(v: Vec3, rho: f64) -> Vec3 {
    let p = Matrix2::rotation(rho).apply([v[0], v[1]]);
    [p[0], p[1], v[2]]
}

/// `max |ω(S_ρx) − R_ρω(x)|` over the box.
pub fn helical_symmetry_defect(field: &VectorField3, rho: f64, h: f64, samples: &SampleBox) -> f64 {
    samples
        .points()
        .par_iter()
        .map(|&x| {
            let a = field.eval(screw(x, rho, h));
            let b = rotate3(field.eval(x), rho);
            (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Centered-difference divergence at `x`.
pub fn divergence_fd(field: &VectorField3, x: Vec3, step: f64) -> f64 {
    (0..3)
        .map(|k| {
            let (mut a, mut b) = (x, x);
            a[k] += step;
            b[k] -= step;
            (field.eval(a)[k] - field.eval(b)[k]) / (2.0 * step)
        })
        .sum()
}

pub fn max_divergence(field: &VectorField3, samples: &SampleBox, step: f64) -> f64 {
    samples
        .points()
        .par_iter()
        .map(|&x| divergence_fd(field, x, step).abs())
        .reduce(|| 0.0, f64::max)
}

/// `γ(s) = (Q_{s/h}p, s)`, carrying weight `8π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilamentCurve {
    pub p: [f64; 2],
    pub h: f64,
    pub weight: f64,
}

impl FilamentCurve {
    pub fn point(&self, s: f64) -> Vec3 {
        let q = Matrix2::rotation(s / self.h).apply(self.p);
        [q[0], q[1], s]
    }

    /// `dγ/ds`; the line measure is taken in the parameter `s`.
    pub fn tangent(&self, s: f64) -> Vec3 {
        let q = Matrix2::rotation(s / self.h).apply(self.p);
        [-q[1] / self.h, q[0] / self.h, 1.0]
    }
}

pub fn filament_curves(ctx: &StreamContext) -> Vec<FilamentCurve> {
    ctx.frames
        .iter()
        .map(|f| FilamentCurve {
            p: f.p,
            h: ctx.params.h,
            weight: LINE_WEIGHT,
        })
        .collect()
}

/// A compactly supported smooth test field.
pub trait TestField: Sync {
    fn eval(&self, x: Vec3) -> Vec3;
    /// Interval of `x₃` outside which the field vanishes.
    fn axial_support(&self) -> (f64, f64);
}

/// `χ(x)·(a + Bx)` with `χ(x) = exp(1 − 1/(1 − |x−c|²/ρ²))` on the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpField {
    pub center: Vec3,
    pub radius: f64,
    pub a: Vec3,
    #[serde(default)]
    pub b: [[f64; 3]; 3],
}

impl BumpField {
    /// `(0, 0, χ)`
    pub fn axial(center: Vec3, radius: f64) -> Self {
        Self {
            center,
            radius,
            a: [0.0, 0.0, 1.0],
            b: [[0.0; 3]; 3],
        }
    }

    /// A fixed field with all components and some linear variation.
    pub fn generic() -> Self {
        Self {
            center: [0.05, -0.03, 0.1],
            radius: 1.0,
            a: [0.4, -0.3, 1.0],
            b: [[0.0, 1.0, 0.0], [-0.5, 0.0, 0.2], [0.3, 0.0, 0.2]],
        }
    }

    pub fn chi(&self, x: Vec3) -> f64 {
        let q = (0..3).map(|k| (x[k] - self.center[k]).powi(2)).sum::<f64>() / (self.radius * self.radius);
        if q >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - q)).exp()
        }
    }
}

impl TestField for BumpField {
    fn eval(&self, x: Vec3) -> Vec3 {
        let c = self.chi(x);
        if c == 0.0 {
            return [0.0; 3];
        }
        let mut v = self.a;
        for (i, vi) in v.iter_mut().enumerate() {
            *vi += (0..3).map(|k| self.b[i][k] * x[k]).sum::<f64>();
            *vi *= c;
        }
        v
    }

    fn axial_support(&self) -> (f64, f64) {
        (self.center[2] - self.radius, self.center[2] + self.radius)
    }
}

/// Quadrature nodes `(ξ, w(ξ)·dξ)` covering the planar cores of `w`.
#[derive(Debug, Clone)]
pub struct CoreSamples {
    pub nodes: Vec<([f64; 2], f64)>,
}

impl CoreSamples {
    /// Gauss–Legendre in `log(1+|y|)` over `|y| ≤ 2δ/(εμ√|log ε|)` around the first
    /// vertex, copied to the others by the dihedral symmetry.
    pub fn new(ctx: &StreamContext, n_angles: usize) -> Result<Self> {
        let ev = &InnerEvaluator::new(ctx);
        let f1 = &ctx.frames[0];
        let em = ctx.em;
        let rad = ctx.inner_radius();
        let defect = ev.defect();
        let tmax = (2.0 * rad / em).ln_1p();
        let panels = ((2.0 * tmax).ceil() as usize).max(16);
        let dth = 2.0 * PI / n_angles as f64;
        let det = f1.mj.det().abs();
        let first: Vec<([f64; 2], f64)> = composite_gl(0.0, tmax, panels, 8)
            .par_iter()
            .flat_map_iter(|&(t, w)| {
                let rho = t.exp_m1();
                let jac = rho * (1.0 + rho) * w * dth * det;
                (0..n_angles).filter_map(move |k| {
                    let (s, c) = ((k as f64 + 0.5) * dth).sin_cos();
                    let y = [rho * c, rho * s];
                    let smp = ev.sample(y);
                    // ε²μ² F(V) = η U e^D, and dξ = ε²μ² det M dy
                    let cut = smoothstep(2.0 - em * rho / rad).0;
                    let mass = cut * smp.eta * smp.u * (smp.d + defect).exp() * jac;
                    (mass != 0.0).then(|| (f1.to_global([em * y[0], em * y[1]]), mass))
                })
            })
            .collect();
        if first.iter().any(|(_, m)| !m.is_finite()) {
            return Err(Error::QuadratureFailure("core vorticity is not finite".into()));
        }
        let mut nodes = Vec::with_capacity(first.len() * ctx.frames.len());
        for f in &ctx.frames {
            nodes.extend(first.iter().map(|&(x, m)| (f.q.apply(x), m)));
        }
        Ok(Self { nodes })
    }

    /// `∫ w` over one core.
    pub fn core_mass(&self, n_cores: usize) -> f64 {
        self.nodes.iter().map(|n| n.1).sum::<f64>() / n_cores as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    /// `∫ ω·φ dx`
    pub volume: f64,
    /// `8π Σⱼ ∫ φ(γⱼ(s))·γⱼ′(s) ds`
    pub lines: f64,
    pub gap: f64,
}

/// Number of axial Gauss–Legendre panels per unit length.
const AXIAL_PANELS: f64 = 8.0;

/// `∫ω·φ dx − 8π Σⱼ ∫φ(γⱼ)·γⱼ′ ds` at `t = 0`, `ω` lifted from `w = F(V)`.
pub fn weak_convergence_gap(ctx: &StreamContext, phi: &impl TestField) -> Result<WeakReport> {
    let cores = CoreSamples::new(ctx, 64)?;
    weak_convergence_gap_with(ctx, &cores, phi)
}

pub fn weak_convergence_gap_with(ctx: &StreamContext, cores: &CoreSamples, phi: &impl TestField) -> Result<WeakReport> {
    let h = ctx.params.h;
    let (z0, z1) = phi.axial_support();
    let panels = (((z1 - z0) * AXIAL_PANELS).ceil() as usize).max(4);
    let axial = composite_gl(z0, z1, panels, 8);
    // x = (Q_{x₃/h}ξ, x₃): ω(x) = w(ξ)((1/h)Q_{π/2}x′, 1), unit Jacobian
    let slices: Vec<f64> = axial
        .par_iter()
        .map(|&(x3, wz)| {
            let q = Matrix2::rotation(x3 / h);
            cores
                .nodes
                .iter()
                .map(|&(xi, m)| {
                    let xp = q.apply(xi);
                    let f = phi.eval([xp[0], xp[1], x3]);
                    m * (f[2] + (xp[0] * f[1] - xp[1] * f[0]) / h)
                })
                .sum::<f64>()
                * wz
        })
        .collect();
    let volume: f64 = slices.iter().sum();
    let lines: f64 = filament_curves(ctx)
        .iter()
        .map(|c| {
            c.weight
                * axial
                    .iter()
                    .map(|&(s, w)| {
                        let (f, t) = (phi.eval(c.point(s)), c.tangent(s));
                        w * (f[0] * t[0] + f[1] * t[1] + f[2] * t[2])
                    })
                    .sum::<f64>()
        })
        .sum();
    if !volume.is_finite() || !lines.is_finite() {
        return Err(Error::QuadratureFailure("weak-convergence integrals are not finite".into()));
    }
    Ok(WeakReport {
        volume,
        lines,
        gap: volume - lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{H2Grid, StreamParams};

    fn smooth_w(x: [f64; 2]) -> f64 {
        let q = (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2);
        (1.0 - q).max(0.0).powi(4)
    }

    #[test]
    fn lift_at_zero_height() {
        let x = [0.4, -0.2, 0.0];
        let v = lift_vorticity(smooth_w, x, 2.0);
        let w = smooth_w([0.4, -0.2]);
        assert_eq!(v, [0.1 * w, 0.2 * w, w]);
    }

    #[test]
    fn radial_w_gives_axially_constant_third_component() {
        let w = |x: [f64; 2]| (-(x[0] * x[0] + x[1] * x[1])).exp();
        let a = lift_vorticity(w, [0.3, 0.5, 0.0], 1.5)[2];
        for z in [0.7, -2.0, 9.0] {
            assert!((lift_vorticity(w, [0.3, 0.5, z], 1.5)[2] - a).abs() < 1e-15);
        }
    }

    #[test]
    fn lifted_field_is_divergence_free_and_helical() {
        let h = 0.8;
        let f = VectorField3::lifted(smooth_w, h);
        let b = SampleBox::cube(1.2, 9);
        assert!(max_divergence(&f, &b, 1e-3) < 1e-5);
        for rho in [0.37, -1.9, 2.0 * PI] {
            assert!(helical_symmetry_defect(&f, rho, h, &b) < 1e-12);
        }
        let c = VectorField3::analytic(|_| [1.0, 0.0, 0.0]);
        assert!(helical_symmetry_defect(&c, 1.0, h, &b) > 0.1);
    }

    #[test]
    fn divergence_error_is_second_order() {
        let f = VectorField3::lifted(smooth_w, 1.3);
        let x = [0.2, 0.1, 0.4];
        let e1 = divergence_fd(&f, x, 4e-2).abs();
        let e2 = divergence_fd(&f, x, 2e-2).abs();
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn curve_tangent_is_derivative() {
        let c = FilamentCurve {
            p: [0.3, 0.1],
            h: 0.7,
            weight: LINE_WEIGHT,
        };
        let s = 0.9;
        let (a, b) = (c.point(s + 1e-6), c.point(s - 1e-6));
        let t = c.tangent(s);
        for k in 0..3 {
            assert!(((a[k] - b[k]) / 2e-6 - t[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn field_away_from_filaments_gives_no_gap() {
        let mut p = StreamParams::new((-10.0f64).exp(), 1.0, 1.0, 3);
        p.grid = H2Grid::coarse();
        let ctx = StreamContext::build(&p).unwrap();
        let far = BumpField::axial([2.0, 0.0, 0.0], 0.5);
        let r = weak_convergence_gap(&ctx, &far).unwrap();
        assert_eq!(r.volume, 0.0);
        assert_eq!(r.lines, 0.0);
    }

    #[test]
    fn core_mass_close_to_line_weight() {
        let mut p = StreamParams::new((-20.0f64).exp(), 1.0, 1.0, 3);
        p.grid = H2Grid::coarse();
        let ctx = StreamContext::build(&p).unwrap();
        let cores = CoreSamples::new(&ctx, 32).unwrap();
        let m = cores.core_mass(3) / LINE_WEIGHT;
        assert!((m - 1.0).abs() < 0.1, "{m}");
    }
}
