use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NclError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("subsystem index {index} out of range for {count} factors")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("not PSD: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("size guard exceeded: {what} = {size} > {limit}")]
    SizeGuard { what: String, size: u128, limit: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not a density operator: {0}")]
    NotDensity(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, NclError>;

impl NclError {
    pub(crate) fn guard(what: impl Into<String>, size: u128, limit: u128) -> Self {
        NclError::SizeGuard {
            what: what.into(),
            size,
            limit,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        NclError::InvalidArgument(msg.into())
    }
}
