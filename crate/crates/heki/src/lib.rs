//! Experiment drivers, file formats and reporting for hierarchical
//! ensemble Kalman inversion.
//!
//! The numerical kernels live in `heki-core`; this crate adds the pieces
//! that need an operating system: JSON experiment configuration, the
//! multi-seed experiment and refinement studies, CSV/JSON/SVG output and
//! the `heki` command-line binary.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod config;
pub mod csvio;
pub mod experiment;
pub mod figures;
pub mod limits;

/// Errors surfaced by the experiment layer.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Numerical failure inside the core library.
    #[error("numerics: {0}")]
    Core(#[from] heki_core::Error),
    /// Filesystem failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed configuration or report serialization.
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    /// Invalid command-line or configuration input.
    #[error("{0}")]
    Invalid(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, AppError>;
