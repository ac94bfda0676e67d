use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("outside the model validity window: {0}")]
    Validity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("ill-conditioned singularity fit: {0}")]
    FitConditioning(String),
    #[error("eigenbasis not orthogonal: {0}")]
    Orthogonality(String),
    #[error("numerical convergence failure: {0}")]
    Convergence(String),
    #[error("signal too weak: {0}")]
    LowSignal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::Validity(_) | Error::Domain(_) => 3,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
