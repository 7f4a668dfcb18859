use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("circuit serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
