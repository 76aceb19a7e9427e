//! Approximate stream function `ψ*` for N helical vortices concentrated at
//! the vertices of a small polygon, its residual and the projection that
//! fixes the rotation speed `α`.
//!
//! Conventions: `div_k_grad` is `∇·(K∇)`, which in the stretched variables
//! of each vertex reads `Δ_z + B`. The residual is
//! `S[ψ] = ∇·(K∇ψ) + F(ψ − (α/2)|log ε||x|²)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::central::theorem_alpha;
use crate::central::Variant;
use crate::error::{Error, Result};
use crate::helical::{local_frame, LocalFrame};

pub mod alpha;
pub mod cutoff;
pub mod h2;
pub mod profile;
pub mod psi;
pub mod residual;

pub use alpha::{cal_a_empirical, cal_a_exact, cal_a_leading, solve_alpha, AlphaSolution};
pub use cutoff::{f_prime, nonlinearity_f, Cutoff};
pub use h2::{H2Field, H2Grid};
pub use psi::{error_e, error_g, psi0_sum, psi_local, psi_local_jet, psi_star, vertex_points};
pub use residual::{residual_s, residual_scan, ResidualReport, ResidualRow};

/// Smallest `εμ` we accept; below this `ε²μ²` underflows.
pub const MIN_EM: f64 = 1e-150;

/// Inputs of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamParams {
    pub epsilon: f64,
    pub r: f64,
    pub h: f64,
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// defaults to `δ²/4`
    #[serde(default)]
    pub delta1: Option<f64>,
    /// defaults to the leading-order speed `2/h² − 2(N−1)/r²`
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub grid: H2Grid,
}

fn default_delta() -> f64 {
    0.1
}

impl StreamParams {
    pub fn new(epsilon: f64, r: f64, h: f64, n: usize) -> Self {
        Self {
            epsilon,
            r,
            h,
            n,
            delta: default_delta(),
            delta1: None,
            alpha: None,
            grid: H2Grid::default(),
        }
    }

    /// Nearest-vertex distance of the polygon of radius `r`.
    pub fn r0(&self) -> f64 {
        2.0 * self.r * (std::f64::consts::PI / self.n as f64).sin()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameters(s));
        if !(self.epsilon > 0.0 && self.epsilon < (-1.0f64).exp()) {
            return bad(format!("epsilon = {} must lie in (0, 1/e)", self.epsilon));
        }
        if self.n < 2 {
            return bad(format!("N = {} < 2", self.n));
        }
        if !(self.r > 0.0 && self.r.is_finite()) || !(self.h > 0.0 && self.h.is_finite()) {
            return bad("r and h must be positive".into());
        }
        let cap = (self.r0() / 4.0).min(0.5);
        if !(self.delta > 0.0 && self.delta < cap) {
            return bad(format!("delta = {} must lie in (0, {cap})", self.delta));
        }
        let l = -self.epsilon.ln();
        if (self.r + self.delta) / l.sqrt() > 0.5 {
            return bad(format!(
                "inner disks reach |x| = {:.3} > 1/2 where the outer cutoff is active; decrease epsilon",
                (self.r + self.delta) / l.sqrt()
            ));
        }
        let d1 = self.delta1();
        if !(d1 > 0.0 && 2.0 * d1 < self.delta * self.delta) {
            return bad(format!("delta1 = {d1} must satisfy 0 < 2 delta1 < delta^2"));
        }
        self.grid.validate()
    }

    pub fn delta1(&self) -> f64 {
        self.delta1.unwrap_or(0.25 * self.delta * self.delta)
    }

    pub fn alpha_leading(&self) -> f64 {
        theorem_alpha(self.r, self.h, self.n, Variant::PolygonHelix)
    }
}

/// Everything needed to evaluate `ψ*`, `F` and `S[ψ*]`.
#[derive(Debug, Clone)]
pub struct StreamContext {
    pub params: StreamParams,
    pub epsilon: f64,
    /// `|log ε|`
    pub log_eps: f64,
    pub mu: f64,
    /// `εμ`
    pub em: f64,
    pub alpha: f64,
    /// `R_ε = r/√|log ε|`
    pub big_r: f64,
    pub frames: Vec<LocalFrame>,
    pub c1: f64,
    pub c2: f64,
    pub k1: f64,
    pub k2: f64,
    pub delta: f64,
    pub delta1: f64,
    pub d_eps: f64,
    /// Fixed-point iterations used by the last μ solve.
    pub mu_iterations: usize,
    pub h2: Arc<H2Field>,
}

impl StreamContext {
    /// Geometry only: μ is set to the given value and `H₂ε ≡ 0`.
    pub fn with_mu(params: &StreamParams, alpha: f64, mu: f64) -> Result<Self> {
        params.validate()?;
        let log_eps = -params.epsilon.ln();
        let big_r = params.r / log_eps.sqrt();
        let (c1, c2) = profile::c_coefficients(big_r, params.h);
        let em = params.epsilon * mu;
        if !(em >= MIN_EM) || !em.is_finite() {
            return Err(Error::InvalidParameters(format!("epsilon*mu = {em:e} underflows")));
        }
        Ok(Self {
            params: *params,
            epsilon: params.epsilon,
            log_eps,
            mu,
            em,
            alpha,
            big_r,
            frames: (0..params.n).map(|j| local_frame(j, params.n, big_r, params.h)).collect(),
            c1,
            c2,
            k1: profile::k1_coefficient(big_r, params.h),
            k2: profile::k2_coefficient(big_r, params.h),
            delta: params.delta,
            delta1: params.delta1(),
            d_eps: -4.0 * params.delta.ln(),
            mu_iterations: 0,
            h2: Arc::new(H2Field::zero(params.n)),
        })
    }

    /// Full construction: μ fixed point, then `H₂ε`.
    pub fn build(params: &StreamParams) -> Result<Self> {
        let alpha = params.alpha.unwrap_or_else(|| params.alpha_leading());
        let mut ctx = Self::with_mu(params, alpha, initial_mu(params))?;
        ctx.solve_mu()?;
        ctx.solve_h2()?;
        Ok(ctx)
    }

    /// Same construction at another `α`. `H₂ε` is kept: its source does not
    /// depend on `α`, and on μ only through terms of order `ε²μ²`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut ctx = Self::with_mu(&self.params, alpha, self.mu)?;
        ctx.h2 = Arc::clone(&self.h2);
        ctx.solve_mu()?;
        Ok(ctx)
    }

    /// Right-hand side of the μ relation at vertex `i`:
    /// `Σ_{j≠i} Ψ(Mⱼ⁻¹(Pᵢ−Pⱼ)) + H₂ε(Pᵢ) − (α/2)|log ε|R_ε²`.
    pub fn mu_relation_rhs(&self, i: usize) -> f64 {
        let pi = self.frames[i].p;
        let sum: f64 = (0..self.params.n)
            .filter(|&j| j != i)
            .map(|j| psi::psi_local(self.frames[j].to_local(pi), self))
            .sum();
        sum + self.h2.eval(pi) - 0.5 * self.alpha * self.params.r * self.params.r
    }

    /// `rhs − 2 log μ`, zero at the fixed point.
    pub fn mu_defect(&self) -> f64 {
        self.mu_relation_rhs(0) - 2.0 * self.mu.ln()
    }

    /// Damped iteration `log μ ← ½ log μ + ½·rhs/2`.
    pub fn solve_mu(&mut self) -> Result<()> {
        const MAX_ITER: usize = 200;
        const TOL: f64 = 1e-10;
        let mut step = f64::INFINITY;
        for it in 1..=MAX_ITER {
            let target = 0.5 * self.mu_relation_rhs(0);
            let log_mu = self.mu.ln();
            let next = 0.5 * log_mu + 0.5 * target;
            step = (next - log_mu).abs();
            if !next.is_finite() {
                break;
            }
            self.set_mu(next.exp())?;
            // relative change of μ
            if step.exp_m1().abs() < TOL {
                self.mu_iterations = it;
                return Ok(());
            }
        }
        Err(Error::FixedPointDivergence {
            iterations: MAX_ITER,
            last_step: step,
        })
    }

    fn set_mu(&mut self, mu: f64) -> Result<()> {
        let em = self.epsilon * mu;
        if !(em >= MIN_EM) || !em.is_finite() {
            return Err(Error::InvalidParameters(format!("epsilon*mu = {em:e} out of range")));
        }
        self.mu = mu;
        self.em = em;
        Ok(())
    }

    pub fn solve_h2(&mut self) -> Result<()> {
        let ctx = &*self;
        let field = H2Field::solve(
            |x| psi::error_g(x, ctx),
            self.params.h,
            self.params.n,
            &self.params.grid,
            self.frames[0].p,
        )?;
        self.h2 = Arc::new(field);
        Ok(())
    }

    /// `δ log|log ε| < |log μ| < δ⁻¹ log|log ε|`.
    pub fn mu_in_range(&self) -> bool {
        let ll = self.log_eps.ln();
        let lm = self.mu.ln().abs();
        self.delta * ll < lm && lm < ll / self.delta
    }

    /// `log μ² − 2(N−1) log|log ε|`.
    pub fn mu_excess(&self) -> f64 {
        2.0 * self.mu.ln() - 2.0 * (self.params.n - 1) as f64 * self.log_eps.ln()
    }

    /// Radius of the inner disks in the stretched variable `z`.
    pub fn inner_radius(&self) -> f64 {
        self.delta / self.log_eps.sqrt()
    }

    pub fn cutoff(&self) -> Cutoff {
        Cutoff::new(self)
    }
}

/// `μ₀ = |log ε|^{N−1}`, the leading-order size of μ.
pub fn initial_mu(params: &StreamParams) -> f64 {
    (-params.epsilon.ln()).powi(params.n as i32 - 1)
}
