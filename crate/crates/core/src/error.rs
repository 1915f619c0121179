use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian: max |A - A†| = {0:.3e}")]
    NotHermitian(f64),

    #[error("dressed states are undefined for Ω = Δ = 0")]
    DegenerateDrive,

    #[error("operation requires a Gaussian pulse, got {0}")]
    UnsupportedShape(&'static str),

    #[error("singular parameters: {0}")]
    SingularParameters(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("propagation diverged at t = {time:.6}: {reason}")]
    Diverged { time: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
