use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("assignment has {got} bits but the formula has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("variable {var} is outside 1..={num_vars}")]
    VarOutOfRange { var: usize, num_vars: usize },

    #[error("asked for {k} decomposition variables but the formula has only {num_vars}")]
    TooManyVars { k: usize, num_vars: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{size} states exceed the simulation limit of {limit}")]
    ScaleExceeded { size: u128, limit: u128 },

    #[error("clauses {first} and {second} share a variable")]
    NotDisjoint { first: usize, second: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
