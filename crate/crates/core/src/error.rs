use thiserror::Error;

use crate::solver::SolutionPair;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("inadmissible convexity bounds (tau_minus={tau_minus}, tau_plus={tau_plus}); need 0 < tau_minus <= tau_plus < 2")]
    Inadmissible { tau_minus: f64, tau_plus: f64 },

    /// Newton failed to reach the tolerance. Carries the last iterate.
    #[error("newton did not converge at lambda={lambda}, gamma={gamma} (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence {
        lambda: f64,
        gamma: f64,
        residual: f64,
        iterations: usize,
        last: Box<SolutionPair>,
    },

    #[error("singular linear system at block row {0}")]
    Singular(usize),

    #[error("eigenvalue iteration stagnated (residual {residual:.3e} after {iterations} iterations)")]
    EigenStagnation { residual: f64, iterations: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("unknown nonlinearity spec `{0}` (expected exp, pow:<p> or exppow:<a>)")]
    UnknownPreset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
