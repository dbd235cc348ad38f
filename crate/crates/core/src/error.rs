use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("agglomeration error: {0}")]
    Agglomeration(String),

    #[error(
        "factorization failed: non-positive pivot {value:e} at index {index} \
         (matrix is not SPD; check that the penalty constant C_W is large enough)"
    )]
    Factorization { index: usize, value: f64 },

    #[error("preconditioned operator not positive definite at iteration {iteration}: <z, r> = {value:e}")]
    Definiteness { iteration: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// The innermost error below any `Context` layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    }
}
