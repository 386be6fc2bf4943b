//! Error type shared by the numerical routines.

use core::fmt;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two operands had incompatible dimensions.
    DimensionMismatch {
        /// Dimension the operation required.
        expected: usize,
        /// Dimension actually supplied.
        got: usize,
    },
    /// A matrix that must be symmetric positive definite was not.
    NotPositiveDefinite,
    /// A linear system was singular to working precision.
    SingularSystem,
    /// A parameter was outside its admissible range.
    InvalidParameter(&'static str),
    /// An ensemble operation was attempted on an empty ensemble.
    EmptyEnsemble,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            Error::SingularSystem => write!(f, "linear system is singular"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::EmptyEnsemble => write!(f, "ensemble has no members"),
        }
    }
}

#[cfg(feature = "std")]
extern crate std;

#[cfg(feature = "std")]
impl std::error::Error for Error {}
