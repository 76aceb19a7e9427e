//! Liouville bubbles and the local corrections built on them.
//!
//! `Γ(y) = log 8/(1+|y|²)²` solves `ΔΓ + e^Γ = 0` with `∫e^Γ = 8π`, and
//! `Γ_a(z) = Γ(z/a) − 4 log a` is its rescaling to width `a = εμ`.

use crate::numerics::Jet;

pub const LN_8: f64 = 2.079_441_541_679_835_8;

/// `Γ(y)`.
pub fn liouville_unit(y: [f64; 2]) -> f64 {
    LN_8 - 2.0 * (y[0] * y[0] + y[1] * y[1]).ln_1p()
}

/// `Γ_{εμ}(z)` with `a = εμ`.
pub fn liouville_profile(z: [f64; 2], a: f64) -> f64 {
    LN_8 - 2.0 * (a * a + z[0] * z[0] + z[1] * z[1]).ln()
}

/// `U(y) = e^{Γ(y)} = 8/(1+|y|²)²`.
pub fn bubble(y: [f64; 2]) -> f64 {
    let d = 1.0 + y[0] * y[0] + y[1] * y[1];
    8.0 / (d * d)
}

/// Jet of `Γ_a` at `z`.
pub fn liouville_jet(z: [f64; 2], a: f64) -> Jet {
    let t = Jet::norm_sq(z) + Jet::constant(a * a);
    let v = t.v;
    t.compose(LN_8 - 2.0 * v.ln(), -2.0 / v, 2.0 / (v * v))
}

/// `ΔΓ_a(z) = −8a²/(a²+|z|²)²`.
pub fn liouville_laplacian(z: [f64; 2], a: f64) -> f64 {
    let d = a * a + z[0] * z[0] + z[1] * z[1];
    -8.0 * a * a / (d * d)
}

/// `(c₁, c₂)` for the vertex radius `R` and pitch parameter `h`.
pub fn c_coefficients(big_r: f64, h: f64) -> (f64, f64) {
    let d = h * h + big_r * big_r;
    let c1 = 0.5 * big_r * h.abs() / d.powf(1.5);
    let c2 = big_r * big_r / (8.0 * d * d) * (2.0 * h * h / d + 1.0);
    (c1, c2)
}

/// Weight of `H₁` in `Ψ_{εμ}`: `4R³/(h(h²+R²)^{3/2})`.
pub fn k1_coefficient(big_r: f64, h: f64) -> f64 {
    4.0 * big_r.powi(3) / (h.abs() * (h * h + big_r * big_r).powf(1.5))
}

/// Weight of the retained dipole term: `4R(3h²+R²)/(h(h²+R²)^{3/2})`.
pub fn k2_coefficient(big_r: f64, h: f64) -> f64 {
    let d = h * h + big_r * big_r;
    4.0 * big_r * (3.0 * h * h + big_r * big_r) / (h.abs() * d.powf(1.5))
}

// H₁ = q(|z|²)·Re(z³) where, with x = |z|²/a²,
//   q  = (1/12a²)·[1/(1+x) + x·β(x)]
//   q' = −β(x)/(4a⁴),   q'' = −γ(x)/(4a⁶)
//   β(x) = b(x)/x⁴,  b(x) = ∫₀ˣ s³/(1+s)² ds,  γ(x) = (1/(1+x)² − 4β)/x.
// The series below avoid the cancellation in b for small x.

const SERIES_CUTOFF: f64 = 0.5;

fn beta(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut p = 1.0;
        for k in 0..80 {
            let kf = k as f64;
            sum += p * (kf + 1.0) / (kf + 4.0);
            p *= -x;
            if p.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        let b = 0.5 * x * x - 2.0 * x + 3.0 * x.ln_1p() - x / (1.0 + x);
        b / (x * x * x * x)
    }
}

fn gamma_series(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut p = -1.0;
        for k in 1..80 {
            let kf = k as f64;
            sum += p * kf * (kf + 1.0) / (kf + 4.0);
            p *= -x;
            if p.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        (1.0 / ((1.0 + x) * (1.0 + x)) - 4.0 * beta(x)) / x
    }
}

/// `12a²·q` as a function of `x = |z|²/a²`; `H₁(a·y) = a·Q(|y|²)·Re(y³)/12`.
pub fn h1_scaled(x: f64) -> f64 {
    1.0 / (1.0 + x) + x * beta(x)
}

/// `(q, q', q'')` at `t = |z|²`, written so that nothing underflows when
/// `a` is tiny and `t` is not.
fn h1_q(t: f64, a: f64) -> (f64, f64, f64) {
    let a2 = a * a;
    let x = t / a2;
    if x < 64.0 {
        (
            h1_scaled(x) / (12.0 * a2),
            -beta(x) / (4.0 * a2 * a2),
            -gamma_series(x) / (4.0 * a2 * a2 * a2),
        )
    } else {
        // B(t) = (1/12)[t²/2 − 2a²t + 3a⁴log(1+x) − a⁴t/(a²+t)]
        let big_b = (0.5 * t * t - 2.0 * a2 * t + a2 * a2 * (3.0 * x.ln_1p() - x / (1.0 + x))) / 12.0;
        let t3 = t * t * t;
        (
            1.0 / (12.0 * (a2 + t)) + big_b / t3,
            -3.0 * big_b / (t3 * t),
            -1.0 / (4.0 * t * (a2 + t) * (a2 + t)) + 12.0 * big_b / (t3 * t * t),
        )
    }
}

/// Radial profile `h₁(ρ)` of `H₁ = h₁(|z|)cos 3θ`, regular at the origin
/// and growing like `ρ/8`.
pub fn h1_profile(rho: f64, a: f64) -> f64 {
    h1_q(rho * rho, a).0 * rho.powi(3)
}

/// `H₁(z)`.
pub fn h1_eval(z: [f64; 2], a: f64) -> f64 {
    let t = z[0] * z[0] + z[1] * z[1];
    h1_q(t, a).0 * (z[0] * z[0] * z[0] - 3.0 * z[0] * z[1] * z[1])
}

/// Jet of `H₁` at `z`.
pub fn h1_jet(z: [f64; 2], a: f64) -> Jet {
    let (q, dq, d2q) = h1_q(z[0] * z[0] + z[1] * z[1], a);
    let qj = Jet::norm_sq(z).compose(q, dq, d2q);
    let (z1, z2) = (z[0], z[1]);
    let cubic = Jet::new(
        z1 * z1 * z1 - 3.0 * z1 * z2 * z2,
        [3.0 * (z1 * z1 - z2 * z2), -6.0 * z1 * z2],
        [6.0 * z1, -6.0 * z2, -6.0 * z1],
    );
    qj * cubic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::Adaptive;
    use std::f64::consts::PI;

    #[test]
    fn gamma_values_and_mass() {
        assert!((liouville_unit([0.0, 0.0]) - LN_8).abs() < 1e-15);
        // ∫e^Γ = 2π∫ 8ρ/(1+ρ²)² dρ, in t = ρ/(1+ρ) to get a finite range
        let mass = Adaptive::default()
            .integrate(
                |t| {
                    let rho = t / (1.0 - t);
                    2.0 * PI * bubble([rho, 0.0]) * rho / ((1.0 - t) * (1.0 - t))
                },
                0.0,
                1.0,
            )
            .unwrap();
        assert!((mass - 8.0 * PI).abs() < 1e-10, "{mass}");
    }

    #[test]
    fn rescaled_profile_solves_liouville() {
        let a = 0.3;
        let s = 1e-3;
        for z in [[0.1, 0.2], [-0.4, 0.05], [0.7, -0.9]] {
            let f = |dx: f64, dy: f64| liouville_profile([z[0] + dx, z[1] + dy], a);
            // fourth-order stencil
            let lap = (-f(2.0 * s, 0.0) + 16.0 * f(s, 0.0) - 30.0 * f(0.0, 0.0) + 16.0 * f(-s, 0.0) - f(-2.0 * s, 0.0)
                - f(0.0, 2.0 * s)
                + 16.0 * f(0.0, s)
                - 30.0 * f(0.0, 0.0)
                + 16.0 * f(0.0, -s)
                - f(0.0, -2.0 * s))
                / (12.0 * s * s);
            let rhs = a * a * liouville_profile(z, a).exp();
            assert!((lap + rhs).abs() < 1e-6, "{}", lap + rhs);
            assert!((liouville_jet(z, a).laplacian() - liouville_laplacian(z, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn c_coefficients_by_hand() {
        assert_eq!(c_coefficients(0.0, 1.0), (0.0, 0.0));
        let (c1, c2) = c_coefficients(1.0, 1.0);
        assert!((c1 - 2f64.powf(-2.5)).abs() < 1e-15);
        assert!((c2 - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn c1_peaks_at_half_pitch_over_root_two() {
        // dc₁/dR ∝ h² − 2R² vanishes at R = h/√2
        let h = 1.7;
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 1..20000 {
            let r = i as f64 * 1e-4 * h;
            let c = c_coefficients(r, h).0;
            if c > best {
                best = c;
                arg = r;
            }
        }
        assert!((arg - h / 2f64.sqrt()).abs() < 2e-4 * h);
    }

    #[test]
    fn h1_solves_its_radial_equation() {
        // h'' + h'/ρ − 9h/ρ² = −ρ³/(a²+ρ²)² by differences
        for a in [1e-3, 0.05, 0.4] {
            for rho in [0.3 * a, a, 7.0 * a, 0.8] {
                let s = 1e-3 * rho;
                let f = |r: f64| h1_profile(r, a);
                let d1 = (f(rho + s) - f(rho - s)) / (2.0 * s);
                let d2 = (f(rho + s) - 2.0 * f(rho) + f(rho - s)) / (s * s);
                let res = d2 + d1 / rho - 9.0 * f(rho) / (rho * rho) + rho.powi(3) / (a * a + rho * rho).powi(2);
                let scale = rho / (a * a + rho * rho);
                assert!(res.abs() < 1e-5 * scale.max(1.0), "a={a} rho={rho} res={res}");
            }
        }
    }

    #[test]
    fn h1_matches_integrated_ode() {
        // RK4 on the radial ODE from the small-ρ expansion h ≈ ρ³/(12a²)
        let a = 0.2;
        let rhs = |r: f64, h: f64, dh: f64| -dh / r + 9.0 * h / (r * r) - r.powi(3) / (a * a + r * r).powi(2);
        let mut r = 1e-3;
        let mut y = [h1_profile(r, a), 3.0 * r * r / (12.0 * a * a)];
        let dr = 1e-4;
        while r < 1.0 - 1e-12 {
            let f = |r: f64, y: [f64; 2]| [y[1], rhs(r, y[0], y[1])];
            let k1 = f(r, y);
            let k2 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = f(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            for i in 0..2 {
                y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += dr;
        }
        // the growing mode ρ³ is excited only through the O(ρ⁵) start error
        assert!((y[0] - h1_profile(1.0, a)).abs() < 1e-6, "{} {}", y[0], h1_profile(1.0, a));
    }

    #[test]
    fn h1_is_regular_and_linearly_bounded() {
        let a = 1e-4;
        assert_eq!(h1_profile(0.0, a), 0.0);
        let mut sup: f64 = 0.0;
        for i in 1..=1000 {
            let rho = 0.5 * i as f64 / 1000.0;
            sup = sup.max((h1_profile(rho, a) / rho).abs());
        }
        assert!(sup < 0.126, "{sup}");
        assert!((h1_profile(0.5, a) / 0.5 - 0.125).abs() < 1e-6);
    }

    #[test]
    fn h1_jet_matches_laplace_equation() {
        // ΔH₁ + Re(z³)/(a²+|z|²)² = 0
        for a in [1e-6, 1e-2, 0.3] {
            for z in [[0.01, 0.02], [0.3, -0.1], [-0.2, 0.5], [1e-7, 2e-7]] {
                let j = h1_jet(z, a);
                let t = z[0] * z[0] + z[1] * z[1];
                let src = (z[0].powi(3) - 3.0 * z[0] * z[1] * z[1]) / (a * a + t).powi(2);
                let scale = src.abs().max(1.0 / (a * a + t).sqrt());
                assert!((j.laplacian() + src).abs() < 1e-9 * scale, "a={a} z={z:?}");
                assert!((j.v - h1_eval(z, a)).abs() <= 1e-15 * j.v.abs());
            }
        }
    }
}
