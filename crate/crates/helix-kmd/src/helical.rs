//! The helical reduction operator.
//!
//! `K(x) = (h² I + x⊥x⊥ᵀ)/(h² + |x|²)` with `x⊥ = (−x₂, x₁)`, and
//! `L = −∇·(K∇)`. Near a vertex `Pⱼ = R Qⱼ(1,0)` the stretched coordinates
//! `x − Pⱼ = QⱼM z`, `M = diag(h/√(h²+R²), 1)`, turn `∇·(K∇)` into
//! `Δ_z + B` with `B` small near `z = 0`.
//!
//! Sign convention: [`apply_l`] returns `−∇·(K∇ψ)`. The elliptic problems of
//! the stream construction are written with `∇·(K∇)` itself, which is
//! [`div_k_grad`]; so `Δ_zΨ + B[Ψ] = −apply_l(ψ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarGrid};
use crate::numerics::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2 {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn inverse(&self) -> Matrix2 {
        let d = self.det();
        Matrix2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    /// Frobenius product `A:B`.
    pub fn contract(&self, o: &Matrix2) -> f64 {
        self.a11 * o.a11 + self.a12 * o.a12 + self.a21 * o.a21 + self.a22 * o.a22
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * (self.a11 + self.a22);
        let d = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        [m - d, m + d]
    }

    pub fn max_abs_diff(&self, o: &Matrix2) -> f64 {
        [
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        ]
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

pub fn k_matrix(x: [f64; 2], h: f64) -> Matrix2 {
    let d = h * h + x[0] * x[0] + x[1] * x[1];
    Matrix2::new(
        (h * h + x[1] * x[1]) / d,
        -x[0] * x[1] / d,
        -x[0] * x[1] / d,
        (h * h + x[0] * x[0]) / d,
    )
}

/// Row divergence of `K`: `−x (1 + 2h²/D)/D` with `D = h² + |x|²`.
pub fn div_k(x: [f64; 2], h: f64) -> [f64; 2] {
    let d = h * h + x[0] * x[0] + x[1] * x[1];
    let c = -(1.0 + 2.0 * h * h / d) / d;
    [c * x[0], c * x[1]]
}

/// `∇·(K∇ψ)(x)` from a jet of `ψ` at `x`.
pub fn div_k_grad(psi: &Jet, x: [f64; 2], h: f64) -> f64 {
    let k = k_matrix(x, h);
    let dk = div_k(x, h);
    k.contract(&psi.hessian()) + dk[0] * psi.g[0] + dk[1] * psi.g[1]
}

/// `Lψ = −∇·(K∇ψ)` from a jet of `ψ` at `x`.
pub fn apply_l(psi: &Jet, x: [f64; 2], h: f64) -> f64 {
    -div_k_grad(psi, x, h)
}

/// Five-point-stencil estimate of `Lψ` for a callable `ψ`.
pub fn apply_l_fd(psi: impl Fn([f64; 2]) -> f64, x: [f64; 2], h: f64, step: f64) -> f64 {
    let e = step;
    let f = |dx: f64, dy: f64| psi([x[0] + dx, x[1] + dy]);
    let f0 = f(0.0, 0.0);
    let jet = Jet::new(
        f0,
        [(f(e, 0.0) - f(-e, 0.0)) / (2.0 * e), (f(0.0, e) - f(0.0, -e)) / (2.0 * e)],
        [
            (f(e, 0.0) - 2.0 * f0 + f(-e, 0.0)) / (e * e),
            (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e),
            (f(0.0, e) - 2.0 * f0 + f(0.0, -e)) / (e * e),
        ],
    );
    apply_l(&jet, x, h)
}

/// `Lψ` at interior node `(i, j)` of a Cartesian grid.
pub fn apply_l_grid(grid: &ScalarGrid, i: usize, j: usize, h: f64) -> Result<f64> {
    let GridGeometry::Cartesian { x0, y0, dx, dy, nx, ny } = grid.geometry else {
        return Err(Error::InvalidParameters("finite differences need a Cartesian grid".into()));
    };
    if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny {
        return Err(Error::GridTooCoarse(i, j));
    }
    let v = |a: usize, b: usize| grid.values[b * nx + a];
    let f0 = v(i, j);
    let jet = Jet::new(
        f0,
        [(v(i + 1, j) - v(i - 1, j)) / (2.0 * dx), (v(i, j + 1) - v(i, j - 1)) / (2.0 * dy)],
        [
            (v(i + 1, j) - 2.0 * f0 + v(i - 1, j)) / (dx * dx),
            (v(i + 1, j + 1) - v(i + 1, j - 1) - v(i - 1, j + 1) + v(i - 1, j - 1)) / (4.0 * dx * dy),
            (v(i, j + 1) - 2.0 * f0 + v(i, j - 1)) / (dy * dy),
        ],
    );
    let x = [x0 + i as f64 * dx, y0 + j as f64 * dy];
    Ok(apply_l(&jet, x, h))
}

/// Coordinates around vertex `index` (0-based, `θ = 2π·index/N`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub index: usize,
    pub n: usize,
    pub big_r: f64,
    pub h: f64,
    pub theta: f64,
    pub p: [f64; 2],
    pub q: Matrix2,
    pub m: Matrix2,
    pub mj: Matrix2,
    pub mj_inv: Matrix2,
}

pub fn stretch(big_r: f64, h: f64) -> f64 {
    h.abs() / (h * h + big_r * big_r).sqrt()
}

pub fn local_frame(index: usize, n: usize, big_r: f64, h: f64) -> LocalFrame {
    let theta = 2.0 * std::f64::consts::PI * index as f64 / n as f64;
    let q = Matrix2::rotation(theta);
    let m = Matrix2::diag(stretch(big_r, h), 1.0);
    let mj = q.mul(&m);
    LocalFrame {
        index,
        n,
        big_r,
        h,
        theta,
        p: q.apply([big_r, 0.0]),
        q,
        m,
        mj,
        mj_inv: mj.inverse(),
    }
}

impl LocalFrame {
    /// `z = Mⱼ⁻¹(x − Pⱼ)`.
    pub fn to_local(&self, x: [f64; 2]) -> [f64; 2] {
        self.mj_inv.apply([x[0] - self.p[0], x[1] - self.p[1]])
    }

    /// `x = Pⱼ + Mⱼ z`.
    pub fn to_global(&self, z: [f64; 2]) -> [f64; 2] {
        let d = self.mj.apply(z);
        [self.p[0] + d[0], self.p[1] + d[1]]
    }

    pub fn stretch(&self) -> f64 {
        self.m.a11
    }
}

pub fn change_to_local(x: [f64; 2], frame: &LocalFrame) -> [f64; 2] {
    frame.to_local(x)
}

/// Coefficients of `B = a₁₁∂₁₁ + a₁₂∂₁₂ + a₂₂∂₂₂ + b₁∂₁ + b₂∂₂` in the
/// stretched variables (`a₁₂` multiplies the single mixed derivative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BCoefficients {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
}

impl BCoefficients {
    /// Exact coefficients at `z` from `A = M⁻¹K(P + Mz)M⁻¹` (frame-independent).
    pub fn exact(z: [f64; 2], big_r: f64, h: f64) -> Self {
        let m = stretch(big_r, h);
        let x = [big_r + m * z[0], z[1]];
        let k = k_matrix(x, h);
        let dk = div_k(x, h);
        Self {
            a11: k.a11 / (m * m) - 1.0,
            a12: 2.0 * k.a12 / m,
            a22: k.a22 - 1.0,
            b1: dk[0] / m,
            b2: dk[1],
        }
    }

    /// Leading-order coefficients near `z = 0`.
    pub fn truncated(z: [f64; 2], big_r: f64, h: f64) -> Self {
        let h = h.abs();
        let d = h * h + big_r * big_r;
        let f = 2.0 * h * h / d + 1.0;
        Self {
            a11: -2.0 * big_r * h / d.powf(1.5) * z[0],
            a12: -2.0 * big_r / (h * d.sqrt()) * z[1],
            a22: 0.0,
            b1: -big_r / (h * d.sqrt()) * f,
            b2: -z[1] / d * f,
        }
    }

    pub fn apply(&self, psi: &Jet) -> f64 {
        self.a11 * psi.h[0] + self.a12 * psi.h[1] + self.a22 * psi.h[2] + self.b1 * psi.g[0] + self.b2 * psi.g[1]
    }
}

/// `B[Ψ](z)` from a jet of `Ψ` in the stretched variables.
pub fn b_operator(psi: &Jet, z: [f64; 2], frame: &LocalFrame) -> f64 {
    BCoefficients::exact(z, frame.big_r, frame.h).apply(psi)
}

/// `L₀Ψ = Δ_zΨ + B[Ψ]`.
pub fn l0(psi: &Jet, z: [f64; 2], frame: &LocalFrame) -> f64 {
    psi.laplacian() + b_operator(psi, z, frame)
}
