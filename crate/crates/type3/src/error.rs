use thiserror::Error;

/// Errors reported by the linear-model engine.
///
/// `Input`, `Dimension`, `Precondition`, and `Estimability` indicate a
/// problem with the caller's data or model; `Degeneracy` indicates that a
/// computation could not be resolved within numerical tolerance (for
/// example a projector whose trace is not close to an integer).
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-estimable hypothesis: {0}")]
    Estimability(String),

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }

    /// Process exit code used by the command-line driver: 1 for bad input,
    /// 2 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degeneracy(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
