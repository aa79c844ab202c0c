use thiserror::Error;

/// Errors raised by the field, kernel and Monte Carlo routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale {k} out of range 0..={n}")]
    ScaleOutOfRange { k: u32, n: u32 },

    #[error("resource cap exceeded: {what} requires side {side}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        side: usize,
        cap: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target point ({0}, {1}) lies on the boundary")]
    BoundaryTarget(i64, i64),

    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),

    #[error("index set mismatch: {left} vs {right}")]
    IndexMismatch { left: usize, right: usize },

    #[error("kernel unavailable: {0}")]
    KernelUnavailable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
