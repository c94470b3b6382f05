use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid argument or parameter domain violation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketing root finder was handed endpoints without a sign change.
    #[error("no sign change on [{lo}, {hi}]: g(lo)={g_lo:e}, g(hi)={g_hi:e}")]
    NoBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    /// An iterative solver ran out of iterations or stalled.
    #[error("no convergence after {iterations} iterations: residual {residual:e} at {last:?}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    /// An integrand produced a non-finite value.
    #[error("non-finite integrand value at {at}")]
    NonFinite { at: f64 },

    /// No consumer cutoff solves the indifference equation on the search range.
    #[error("no equilibrium cutoff on [{lo}, {hi}] (best residual {residual:e})")]
    NoEquilibrium { lo: f64, hi: f64, residual: f64 },

    /// The interval-refund search found no feasible candidate at this resolution.
    #[error("no feasible schedule at this resolution (best constraint violation {violation:e})")]
    Infeasible { violation: f64 },

    /// Malformed input file or serialized payload.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
