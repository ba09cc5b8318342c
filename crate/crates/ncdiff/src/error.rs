//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A configuration value violates a precondition of the model or scheme.
    #[error("invalid configuration: {0}")]
    Validation(String),

    /// Quadrature grid too coarse for the requested spectral operation.
    #[error("aliasing: {nodes} grid nodes cannot resolve {required} (need M >= {required})")]
    Aliasing { nodes: usize, required: usize },

    /// The time stepper produced a non-finite or runaway state.
    #[error("numerical blow-up at t = {t}: {norm_name} = {norm_value}")]
    BlowUp {
        t: f64,
        norm_name: &'static str,
        norm_value: f64,
    },

    #[error("horizon {t_final} is not an integral multiple of dt = {dt}")]
    NonIntegralSteps { t_final: f64, dt: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("report serialization error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed persisted artifact (trajectory / path dump).
    #[error("malformed artifact: {0}")]
    Artifact(String),

    /// A report's built-in property check did not hold.
    #[error("property check failed: {0}")]
    PropertyCheck(String),

    /// Too many Monte Carlo samples were excluded due to blow-up.
    #[error("blow-up exclusion budget exceeded: {excluded} of {total} samples")]
    ExclusionBudget { excluded: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
