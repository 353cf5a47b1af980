use thiserror::Error;

/// Errors shared by all estimation and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stable index must lie in (0, 2), got {0}")]
    BetaOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("calibration target unreachable: {0}")]
    NoSolution(String),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
