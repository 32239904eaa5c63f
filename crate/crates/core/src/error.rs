use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// `InvalidInput` covers malformed data (empty vectors, NaN, length
/// mismatches); `Domain` covers well-formed values outside the range where an
/// operation is defined (α outside (0,1), weights off the simplex, ...).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by values outside an operation's domain.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::NotPsd { .. })
    }
}

/// Checks `alpha` lies in the open unit interval.
pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alpha must lie in (0,1), got {alpha}"
        )))
    }
}
