use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on a numeric parameter does not hold.
    #[error("{0}")]
    Domain(String),
    /// User-supplied data (positions, scenario, descriptor) is malformed.
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("insufficient uDOFs for {sources} sources: contiguous segment reaches only ±{reach}")]
    InsufficientDof { sources: usize, reach: u64 },
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Validation(_) | Error::InsufficientDof { .. }
        )
    }
}
