use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("matrix has no positive part")]
    Degenerate,
    #[error("state vector has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("invalid Dirichlet parameters: {0}")]
    InvalidDirichlet(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("parameter vector has {found} entries, model expects {expected}")]
    ParamLength { expected: usize, found: usize },
    #[error("invalid measurement label {0:?}")]
    InvalidLabel(char),
    #[error("dimension {0} is not a power of two")]
    NotQubits(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value encountered")]
    NonFinite,
}
