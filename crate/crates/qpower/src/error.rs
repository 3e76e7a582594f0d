use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M†| entry = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("not a probability vector: {reason}")]
    NotSimplex { reason: String },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("outside the formula's validity region: {0}")]
    OutsideValidity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("operators do not form a POVM: {0}")]
    NotPovm(String),

    #[error("threshold {threshold} exceeds the maximum feasible output energy {max_feasible}")]
    Infeasible { threshold: f64, max_feasible: f64 },

    #[error("unsupported dimension {got} ({context})")]
    UnsupportedDim { got: usize, context: &'static str },

    #[error("Fock cutoff {cutoff} too small: truncated tail mass {tail:.3e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("need at least {needed} curve points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
