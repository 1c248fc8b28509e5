use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("singular detuning: {0}")]
    Singular(String),

    #[error("unstable chain: transverse mode {mode} has non-positive eigenvalue {eigenvalue:e}")]
    UnstableChain { mode: usize, eigenvalue: f64 },

    #[error("degenerate modes {first} and {second}: frequencies differ by less than 1 Hz")]
    DegenerateModes { first: usize, second: usize },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("zero variance at point {index}")]
    ZeroVariance { index: usize },

    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),

    #[error(
        "Fock truncation leakage {leakage:e} exceeds bound {bound:e}; increase the cutoff (currently {cutoff})"
    )]
    Truncation {
        leakage: f64,
        bound: f64,
        cutoff: usize,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::UnstableChain { .. }
                | Error::InvalidDensity(_)
                | Error::Truncation { .. }
                | Error::Optimization(_)
                | Error::ZeroVariance { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
