use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// `e^x` left the representable range while evaluating at `t`.
    #[error("range error: exponential overflow at t = {t}")]
    Range { t: f64 },

    #[error("range error: exponential overflow at node {node} (u = {t})")]
    RangeAtNode { node: usize, t: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// The boundary pairing hypothesis was violated on a sampled point.
    #[error("certificate failed: min <F(x),x> = {min:e}, threshold {threshold:e} (needs 0 < threshold <= min)")]
    CertificateFailed { min: f64, threshold: f64 },

    /// A zero exists but the search did not reach it within budget.
    #[error("search budget exhausted: best residual {best_residual:e}")]
    BudgetExhausted { best_residual: f64 },

    #[error("grid functions live on different meshes")]
    MeshMismatch,

    #[error("no bracket found: {0}")]
    Bracket(String),

    #[error("descent stagnated at {value} (gradient norm {grad:e})")]
    Stagnation { value: f64, grad: f64 },

    #[error("schedule did not converge; relative Cauchy differences {trace:?}")]
    ScheduleNotConverged { trace: Vec<f64> },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
