use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0} points / h={1} vs {2} points / h={3}")]
    GridMismatch(usize, f64, usize, f64),

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("{modes} modes is too many for a dense Fock operator (limit {limit})")]
    TooManyModes { modes: usize, limit: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("time bin [{lo}, {hi}) invalid: {reason}")]
    InvalidBin { lo: usize, hi: usize, reason: String },

    #[error("bin width {width} is not divisible by n = {n}")]
    NotDivisible { width: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular Sylvester operator (smallest singular value {0:e}); use the quadrature method")]
    SingularSylvester(f64),

    #[error("integrand does not decay within horizon {horizon} (norm {norm:e})")]
    NonDecaying { horizon: f64, norm: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("measure bins do not partition [0, {0})")]
    BinsNotPartition(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
