//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PtsbError {
    /// A model or discretization parameter is out of its allowed range.
    #[error("invalid parameter `{name}`: {reason} (got {value})")]
    Parameter {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// Evaluation outside the domain of a function (e.g. ω ≤ 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A Fock-space build would exceed the configured dimension cap.
    #[error("matrix dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// Near-resonant denominator ω_k(A + B + ω_k) in the per-mode solve.
    #[error("singular mode k={mode}: |omega*(A+B+omega)| = {magnitude:.3e} below 1e-14")]
    SingularMode { mode: usize, magnitude: f64 },

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The ODE integrator aborted (step underflow or non-finite state).
    #[error("integration aborted at t={t}: {reason}")]
    IntegrationAborted { t: f64, reason: String },

    /// Not enough data for a derived quantity (e.g. finite differences).
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, PtsbError>;
