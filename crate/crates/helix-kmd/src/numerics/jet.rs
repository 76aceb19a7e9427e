//! Second-order derivative bundles for planar scalar fields.
//!
//! A [`Jet`] carries the value, gradient and Hessian of a function at one
//! point. Sums, products, composition with scalar functions and affine
//! changes of variables all propagate exactly, which is what the helical
//! operator needs to apply `∇·(K∇)` without finite differences.

use std::ops::{Add, Mul, Neg, Sub};

use crate::helical::Matrix2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    /// Hessian entries (xx, xy, yy).
    pub h: [f64; 3],
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        g: [0.0; 2],
        h: [0.0; 3],
    };

    pub fn new(v: f64, g: [f64; 2], h: [f64; 3]) -> Self {
        Self { v, g, h }
    }

    pub fn constant(v: f64) -> Self {
        Self {
            v,
            ..Self::ZERO
        }
    }

    /// The coordinate function `p ↦ p[i]` evaluated at `p`.
    pub fn coord(i: usize, p: [f64; 2]) -> Self {
        let mut g = [0.0; 2];
        g[i] = 1.0;
        Self {
            v: p[i],
            g,
            h: [0.0; 3],
        }
    }

    /// `|p|²` at `p`.
    pub fn norm_sq(p: [f64; 2]) -> Self {
        Self {
            v: p[0] * p[0] + p[1] * p[1],
            g: [2.0 * p[0], 2.0 * p[1]],
            h: [2.0, 0.0, 2.0],
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            g: [c * self.g[0], c * self.g[1]],
            h: [c * self.h[0], c * self.h[1], c * self.h[2]],
        }
    }

    /// `f ∘ self` given `f`, `f'`, `f''` at `self.v`.
    pub fn compose(self, f: f64, df: f64, d2f: f64) -> Self {
        let [gx, gy] = self.g;
        Self {
            v: f,
            g: [df * gx, df * gy],
            h: [
                df * self.h[0] + d2f * gx * gx,
                df * self.h[1] + d2f * gx * gy,
                df * self.h[2] + d2f * gy * gy,
            ],
        }
    }

    pub fn ln(self) -> Self {
        let v = self.v;
        self.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn hessian(&self) -> Matrix2 {
        Matrix2::new(self.h[0], self.h[1], self.h[1], self.h[2])
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0] + self.h[2]
    }

    /// Re-express a jet taken in variables `z` in terms of `x`, where
    /// `z = B x + c`. Only the linear part `B` matters.
    pub fn pull_back(self, b: &Matrix2) -> Self {
        let g = b.transpose().apply(self.g);
        let hz = self.hessian();
        let hx = b.transpose().mul(&hz).mul(b);
        Self {
            v: self.v,
            g,
            h: [hx.a11, 0.5 * (hx.a12 + hx.a21), hx.a22],
        }
    }

    /// Second-order Taylor increment `f(p + d) − f(p)`.
    pub fn taylor_increment(&self, d: [f64; 2]) -> f64 {
        self.g[0] * d[0]
            + self.g[1] * d[1]
            + 0.5 * (self.h[0] * d[0] * d[0] + 2.0 * self.h[1] * d[0] * d[1] + self.h[2] * d[1] * d[1])
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.g.iter().chain(self.h.iter()).all(|x| x.is_finite())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: [a.g[0] * b.v + a.v * b.g[0], a.g[1] * b.v + a.v * b.g[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0],
                a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2],
            ],
        }
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::ZERO, |a, b| a + b)
    }
}
