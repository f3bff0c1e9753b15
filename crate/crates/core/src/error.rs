//! Crate-wide error type.

use thiserror::Error;

/// Errors shared across the evaluation, geometry and solver modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter left the admissible domain, e.g. `beta >= 0` where the
    /// partition function is infinite.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integral failed its numerical decay test and is presumed divergent.
    #[error("divergence: {0}")]
    Divergence(String),

    /// The requested constraint triple admits no dual parameters: the solver
    /// iterates escaped toward the boundary of the parameter domain.
    #[error("infeasible target: {0}")]
    Infeasible(String),

    /// A certified truncation or iteration budget was exhausted.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Invalid run configuration (bad box sizes, tolerances, config files).
    #[error("config error: {0}")]
    Config(String),

    /// A grid function with an empty finite domain was passed to a transform.
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    /// Richardson extrapolation toward a boundary point did not settle.
    /// `diverging = true` means the sampled values grow without bound, which
    /// callers may interpret as a +infinity boundary value.
    #[error("extrapolation failed (diverging = {diverging}): {message}")]
    Extrapolation { message: String, diverging: bool },

    /// A sample point lies outside the low-density analyticity region.
    #[error("outside analyticity region: {0}")]
    Region(String),

    /// I/O or (de)serialization failure while persisting artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI: 1 config, 2 domain/infeasible,
    /// 3 budget, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            Error::Domain(_)
            | Error::Infeasible(_)
            | Error::Divergence(_)
            | Error::Region(_)
            | Error::EmptyDomain(_)
            | Error::Extrapolation { .. } => 2,
            Error::Budget(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
