//! The nonlinearity `F(s) = ε² η(s) eˢ`.
//!
//! `η` switches on between `s = b + d` and `s = b + 2d` where
//! `b = 2 log|log ε| + 2 log μ + log 8` and `d = d_ε = −4 log δ`.

use super::StreamContext;
use crate::numerics::smoothstep;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub base: f64,
    pub d: f64,
    pub log_eps2: f64,
}

impl Cutoff {
    pub fn new(ctx: &StreamContext) -> Self {
        Self {
            base: 2.0 * ctx.log_eps.ln() + 2.0 * ctx.mu.ln() + super::profile::LN_8,
            d: ctx.d_eps,
            log_eps2: 2.0 * ctx.epsilon.ln(),
        }
    }

    /// `(η, η')` as functions of `s − b`.
    pub fn eta_shifted(&self, sb: f64) -> (f64, f64) {
        let (v, d1, _) = smoothstep((sb - self.d) / self.d);
        (v, d1 / self.d)
    }

    pub fn eta(&self, s: f64) -> (f64, f64) {
        self.eta_shifted(s - self.base)
    }

    pub fn f(&self, s: f64) -> f64 {
        let (e, _) = self.eta(s);
        if e == 0.0 {
            0.0
        } else {
            e * (self.log_eps2 + s).exp()
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        let (e, e1) = self.eta(s);
        if e == 0.0 && e1 == 0.0 {
            0.0
        } else {
            (e + e1) * (self.log_eps2 + s).exp()
        }
    }

    /// Lower and upper thresholds.
    pub fn thresholds(&self) -> (f64, f64) {
        (self.base + self.d, self.base + 2.0 * self.d)
    }
}

pub fn nonlinearity_f(s: f64, ctx: &StreamContext) -> f64 {
    Cutoff::new(ctx).f(s)
}

pub fn f_prime(s: f64, ctx: &StreamContext) -> f64 {
    Cutoff::new(ctx).f_prime(s)
}
