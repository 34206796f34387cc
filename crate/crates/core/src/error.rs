use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent matrix or vector sizes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Parameters violate one or more admissibility conditions.
    #[error("parameters are not admissible: {}", .0.join("; "))]
    NotAdmissible(Vec<String>),

    /// A routine requiring block-diagonal diffusion was handed something else.
    #[error("diffusion matrix is not block-diagonal: {0}")]
    NotBlockDiagonal(String),

    /// A matrix expected to be positive semi-definite was not.
    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),

    /// The Riccati solution left every bounded set before the requested time.
    #[error("Riccati solution explodes: reached t = {reached}")]
    Explosion { reached: f64 },

    /// Dampening anchor of a Fourier payoff lies outside the moment domain.
    #[error("dampening p = {p} lies outside the moment strip at horizon {horizon}; try a smaller p (0 < p < 1 uses the stock-subtracted payoff)")]
    Strip { p: f64, horizon: f64 },

    /// A root-finder was asked for a value outside the attainable range.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Invalid argument or precondition violation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
