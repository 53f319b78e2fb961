use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("operator family is linearly dependent (smallest singular value {0:e})")]
    LinearDependence(f64),
    #[error("impossible branch: probability {0:e} below threshold")]
    ImpossibleBranch(f64),
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("step range: {0}")]
    Range(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Errors from numerical guards rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SizeGuard(_)
                | Error::ImpossibleBranch(_)
                | Error::NotHermitian(_)
                | Error::NotPositive(_)
                | Error::NotUnitary(_)
                | Error::LinearDependence(_)
                | Error::Trace(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
