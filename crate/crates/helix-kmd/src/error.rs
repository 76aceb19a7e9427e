use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("filaments {j} and {k} collide at sample {m} (distance {dist:e} below threshold {threshold:e})")]
    Collision {
        j: usize,
        k: usize,
        m: usize,
        dist: f64,
        threshold: f64,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("finite-difference stencil leaves the grid at node ({0}, {1})")]
    GridTooCoarse(usize, usize),
    #[error("ODE solve failed: {0}")]
    OdeSolveFailure(String),
    #[error("elliptic solve diverged: {0}")]
    SolverDivergence(String),
    #[error("fixed point iteration for mu diverged after {iterations} iterations (last step {last_step:e})")]
    FixedPointDivergence { iterations: usize, last_step: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("no sign change of the kernel projection on [{lo}, {hi}] (values {f_lo:e}, {f_hi:e})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("source decays too slowly: fitted exponent {0:.3} <= 2")]
    SlowDecay(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
