//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Kernel inversion produced structure inconsistent with a stable density
    /// (negative values beyond floating noise, or core/tail mismatch).
    #[error("profile resolution insufficient: {0}")]
    ResolutionDiagnostic(String),

    #[error(
        "field does not decay at the box boundary: max boundary value {boundary_max:.3e} \
         exceeds {tolerance:.3e} of the field maximum"
    )]
    BoundaryDecay { boundary_max: f64, tolerance: f64 },

    #[error("measure is not admissible: {0}")]
    Inadmissible(String),

    #[error(
        "time {t:.3e} is below the grid resolution floor {floor:.3e}; \
         the kernel would be under-resolved relative to the grid spacing"
    )]
    UnderResolvedTime { t: f64, floor: f64 },

    #[error("function does not decay; the tail estimate diverges: {0}")]
    NonDecaying(String),

    #[error("test function support violation: {0}")]
    SupportViolation(String),

    #[error("initial trace did not converge: pairing oscillation {oscillation:.3e} exceeds {tolerance:.3e}")]
    TraceFailure { oscillation: f64, tolerance: f64 },

    #[error("unknown check name `{0}`")]
    UnknownCheck(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
