use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole on grid: {0}")]
    Pole(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("step size: {0}")]
    StepSize(String),
    #[error("missing snapshot at t = {0}")]
    MissingSnapshot(f64),
    #[error("singular: {0}")]
    Singular(String),
    #[error("convergence: {0}")]
    Convergence(String),
    #[error("ambiguous crossing: {0}")]
    Ambiguous(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("range error at `{path}`: {message}")]
    Range { path: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Range { .. } | Error::InvalidModel(_) => 2,
            Error::Convergence(_) | Error::NoRoot(_) | Error::Ambiguous(_) => 3,
            Error::Io(_) => 1,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
