//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or missing configuration (parameters, ranges, preset names).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// jw hit a pole of the transfer function.
    #[error("transfer function singular at omega = {omega}")]
    Singularity { omega: f64 },

    /// Tabulated nonlinearity evaluated outside its sample range.
    #[error("input {x} outside tabulated range [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },

    /// A trajectory carried no sustained oscillation (decayed or constant).
    #[error("no oscillation detected: {0}")]
    NoOscillation(String),

    /// Analysis window inconsistent with the requested period.
    #[error("windowing error: {0}")]
    Windowing(String),

    /// Integration blew up, underflowed, or a solver failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
