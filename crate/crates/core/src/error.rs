use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is internally inconsistent or fails schema validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// The Poisson truncation window could not meet its tail-mass budget.
    #[error("discarded Poisson tail mass {mass:.3e} exceeds budget {budget:.3e} (mean {mean})")]
    TailMass { mean: f64, mass: f64, budget: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
