use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("degenerate diffusion row {row}: all entries of sigma row are zero")]
    DegenerateDiffusion { row: usize },

    #[error("process {process} starts at {x0}, not above its barrier level {barrier} at t = 0")]
    StartsBelowBarrier {
        process: usize,
        x0: f64,
        barrier: f64,
    },

    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("density evaluated at segment endpoint t = {t}")]
    SingularEvaluation { t: f64 },

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("gamma moment fit needs at least two distinct samples (got {count})")]
    DegenerateSample { count: usize },

    #[error("roughness functional needs beta >= 3, got {0}")]
    ShapeTooSmall(f64),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}
