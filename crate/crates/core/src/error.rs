use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian (max |H - H^dagger| = {defect:e})")]
    NonHermitian { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("{name} must be non-negative and finite, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("at cycle {cycle}: {source}")]
    AtCycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("reduced state belongs to {found}, expected {expected}")]
    GroupMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("step size {dt:e} ms exceeds the stability limit {limit:e} ms")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("spectrum needs an even number of samples (>= 2) so that nu = 0.5 is a grid point, got {0}; adjust n_cycles")]
    OddLength(usize),

    #[error("spectrum is identically zero; crystalline fraction undefined")]
    ZeroSpectrum,
}

pub type Result<T> = std::result::Result<T, Error>;
