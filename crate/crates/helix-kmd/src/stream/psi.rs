//! The building blocks of `ψ*`: the local profile `Ψ_{εμ}`, its copies
//! `ψⱼ` at the vertices, the outer cutoff `η₀` and the error `g`.

use super::profile::{h1_eval, h1_jet, liouville_jet, liouville_laplacian, liouville_profile};
use super::StreamContext;
use crate::helical::{div_k_grad, k_matrix, l0};
use crate::numerics::{smoothstep, Jet};

/// `η₀ = 1` on `|x| ≤ 1/2`, `0` on `|x| ≥ 1`.
pub fn eta0(x: [f64; 2]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    smoothstep(2.0 - 2.0 * r).0
}

pub fn eta0_jet(x: [f64; 2]) -> Jet {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 <= 0.25 {
        return Jet::constant(1.0);
    }
    if r2 >= 1.0 {
        return Jet::ZERO;
    }
    let r = r2.sqrt();
    let (s, s1, s2) = smoothstep(2.0 - 2.0 * r);
    Jet::norm_sq(x)
        .compose(r, 0.5 / r, -0.25 / (r * r2))
        .compose(s, -2.0 * s1, 4.0 * s2)
}

/// `Ψ_{εμ}(z) = Γ_{εμ}(z)(1 + c₁z₁ + c₂|z|²) + k₁H₁(z)`.
pub fn psi_local(z: [f64; 2], ctx: &StreamContext) -> f64 {
    let g = liouville_profile(z, ctx.em);
    g * (1.0 + ctx.c1 * z[0] + ctx.c2 * (z[0] * z[0] + z[1] * z[1])) + ctx.k1 * h1_eval(z, ctx.em)
}

pub fn psi_local_jet(z: [f64; 2], ctx: &StreamContext) -> Jet {
    let g = liouville_jet(z, ctx.em);
    let poly = Jet::constant(1.0) + Jet::coord(0, z).scale(ctx.c1) + Jet::norm_sq(z).scale(ctx.c2);
    g * poly + h1_jet(z, ctx.em).scale(ctx.k1)
}

/// `Pⱼ = R_ε Qⱼ(1,0)`, 0-based.
pub fn vertex_points(ctx: &StreamContext) -> Vec<[f64; 2]> {
    ctx.frames.iter().map(|f| f.p).collect()
}

/// Jet in `x` of `ψⱼ(x) = Ψ_{εμ}(Mⱼ⁻¹(x − Pⱼ))`.
pub fn psi_j_jet(x: [f64; 2], j: usize, ctx: &StreamContext) -> Jet {
    let f = &ctx.frames[j];
    psi_local_jet(f.to_local(x), ctx).pull_back(&f.mj_inv)
}

/// `ψ₀(x) = Σⱼ ψⱼ(x)`.
pub fn psi0_sum(x: [f64; 2], ctx: &StreamContext) -> f64 {
    ctx.frames.iter().map(|f| psi_local(f.to_local(x), ctx)).sum()
}

/// The two singular terms kept out of `E`: `ΔΓ_{εμ} + k₂ε²μ²z₁/(ε²μ²+|z|²)²`.
pub fn retained_terms(z: [f64; 2], ctx: &StreamContext) -> f64 {
    let a2 = ctx.em * ctx.em;
    let d = a2 + z[0] * z[0] + z[1] * z[1];
    liouville_laplacian(z, ctx.em) + ctx.k2 * a2 * z[0] / (d * d)
}

/// `E = L₀Ψ_{εμ} − ΔΓ_{εμ} − k₂ε²μ²z₁/(ε²μ²+|z|²)²`.
pub fn error_e(z: [f64; 2], ctx: &StreamContext) -> f64 {
    l0(&psi_local_jet(z, ctx), z, &ctx.frames[0]) - retained_terms(z, ctx)
}

/// `g = η₀ Σⱼ E(zⱼ) + Σⱼ [∇·(K∇(η₀ψⱼ)) − η₀∇·(K∇ψⱼ)]`.
pub fn error_g(x: [f64; 2], ctx: &StreamContext) -> f64 {
    let eta = eta0_jet(x);
    if eta.v == 0.0 && eta.g == [0.0, 0.0] {
        return 0.0;
    }
    let h = ctx.params.h;
    let flat = eta.g == [0.0, 0.0] && eta.h == [0.0; 3];
    let k = k_matrix(x, h);
    let lap_eta = if flat { 0.0 } else { div_k_grad(&eta, x, h) };
    let mut sum = 0.0;
    for (j, f) in ctx.frames.iter().enumerate() {
        let z = f.to_local(x);
        sum += eta.v * error_e(z, ctx);
        if !flat {
            let pj = psi_j_jet(x, j, ctx);
            let kg = k.apply(pj.g);
            sum += pj.v * lap_eta + 2.0 * (eta.g[0] * kg[0] + eta.g[1] * kg[1]);
        }
    }
    sum
}

/// `ψ*(x) = η₀(x) ψ₀(x) + H₂ε(x)`.
pub fn psi_star(x: [f64; 2], ctx: &StreamContext) -> f64 {
    let e = eta0(x);
    let inner = if e == 0.0 { 0.0 } else { e * psi0_sum(x, ctx) };
    inner + ctx.h2.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helical::Matrix2;
    use crate::stream::{H2Grid, StreamParams};

    fn ctx(l: f64, em_mu: f64) -> StreamContext {
        let mut p = StreamParams::new((-l).exp(), 1.0, 1.0, 3);
        p.grid = H2Grid::coarse();
        StreamContext::with_mu(&p, -2.0, em_mu).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn psi_local_at_origin() {
        let c = ctx(10.0, 100.0);
        let want = (8.0 / c.em.powi(4)).ln();
        assert!(close(psi_local([0.0, 0.0], &c), want));
    }

    #[test]
    fn psi_local_reduces_to_gamma_without_offset() {
        let mut c = ctx(10.0, 100.0);
        c.c1 = 0.0;
        c.c2 = 0.0;
        c.k1 = 0.0;
        for z in [[0.01, 0.02], [-0.05, 0.003]] {
            assert_eq!(psi_local(z, &c), liouville_profile(z, c.em));
        }
    }

    #[test]
    fn eta0_jet_matches_value() {
        for x in [[0.1, 0.2], [0.6, 0.1], [0.3, -0.7], [1.2, 0.0]] {
            let j = eta0_jet(x);
            assert!((j.v - eta0(x)).abs() < 1e-15);
        }
        let x = [0.5, 0.4];
        let s = 1e-5;
        let d = (eta0([x[0] + s, x[1]]) - eta0([x[0] - s, x[1]])) / (2.0 * s);
        assert!((eta0_jet(x).g[0] - d).abs() < 1e-8);
    }

    #[test]
    fn psi_j_operator_matches_local_form() {
        // ∇·(K∇ψⱼ)(x) = L₀Ψ(zⱼ)
        let c = ctx(10.0, 100.0);
        for j in 0..3 {
            let z = [0.03, -0.02];
            let x = c.frames[j].to_global(z);
            let lhs = div_k_grad(&psi_j_jet(x, j, &c), x, c.params.h);
            let rhs = l0(&psi_local_jet(z, &c), z, &c.frames[j]);
            assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn psi0_at_first_vertex() {
        let c = ctx(20.0, 400.0);
        let p1 = c.frames[0].p;
        let want = psi_local([0.0, 0.0], &c)
            + (1..3)
                .map(|j| psi_local(c.frames[j].mj_inv.apply([p1[0] - c.frames[j].p[0], p1[1] - c.frames[j].p[1]]), &c))
                .sum::<f64>();
        assert!(close(psi0_sum(p1, &c), want));
    }

    #[test]
    fn e_stays_bounded_as_core_shrinks() {
        let mut sups = Vec::new();
        for em_mu in [100.0, 50.0, 25.0, 12.5] {
            let c = ctx(10.0, em_mu);
            let rad = c.inner_radius();
            let mut sup: f64 = 0.0;
            for i in 0..=40 {
                for k in 0..32 {
                    let rho = rad * (i as f64 / 40.0).powi(2);
                    let th = (k as f64 + 0.5) * std::f64::consts::TAU / 32.0;
                    sup = sup.max(error_e([rho * th.cos(), rho * th.sin()], &c).abs());
                }
            }
            sups.push(sup);
        }
        let (lo, hi) = sups.iter().fold((f64::MAX, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
        assert!(hi < 3.0 * lo, "{sups:?}");
    }

    #[test]
    fn g_vanishes_outside_unit_disk() {
        let c = ctx(10.0, 100.0);
        assert_eq!(error_g([1.0, 0.0], &c), 0.0);
        assert_eq!(error_g([0.9, 1.3], &c), 0.0);
    }

    #[test]
    fn dihedral_and_mirror_symmetry() {
        let c = ctx(20.0, 400.0);
        let q = Matrix2::rotation(std::f64::consts::TAU / 3.0);
        let pts = [[0.11, 0.07], [0.6, -0.2], [-0.3, 0.45], [0.2, 0.0], [0.81, 0.33]];
        for x in pts {
            let qx = q.apply(x);
            assert!(close(psi0_sum(qx, &c), psi0_sum(x, &c)));
            assert!(close(error_g(qx, &c), error_g(x, &c)), "{} {}", error_g(qx, &c), error_g(x, &c));
            let m = [x[0], -x[1]];
            assert!(close(psi0_sum(m, &c), psi0_sum(x, &c)));
            assert!(close(error_g(m, &c), error_g(x, &c)));
        }
    }
}
