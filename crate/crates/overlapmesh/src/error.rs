//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A mesh operation produced or received a mesh without cells.
    #[error("empty mesh: {0}")]
    EmptyMesh(String),

    /// A mesh file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Geometry too degenerate to process (zero-volume tetrahedron,
    /// vanishing face normal, unresolvable ray classification).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An internal cross-reference audit failed.
    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    /// Conjugate gradient detected a non-positive curvature direction.
    #[error("matrix not positive definite: {0}")]
    IndefiniteMatrix(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateGeometry(msg.into())
    }
}
