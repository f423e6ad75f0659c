use thiserror::Error;

/// Errors raised by the tracking core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("patch of {width}x{height} px is smaller than one {cell}px cell")]
    PatchTooSmall {
        width: usize,
        height: usize,
        cell: usize,
    },
    #[error("invalid input: {0}")]
    Input(&'static str),
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
