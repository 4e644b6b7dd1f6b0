use thiserror::Error;

use crate::dyadic::DyadicRectangle;

#[derive(Debug, Error)]
pub enum Error {
    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(u32, u32),

    #[error("depth {0} outside the supported range 1..={max}", max = crate::dyadic::MAX_DEPTH)]
    InvalidDepth(u32),

    #[error("depth {depth} too large for {what} (at most {max})")]
    DepthTooLarge {
        depth: u32,
        max: u32,
        what: &'static str,
    },

    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value at cell ({x}, {y})")]
    NonFinite { x: usize, y: usize },

    #[error("weight is not strictly positive at cell ({x}, {y})")]
    NonPositiveWeight { x: usize, y: usize },

    #[error("rectangle {rect} has no cancellative Haar function at depth {depth}")]
    FinestLevel { rect: DyadicRectangle, depth: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exponent p = {p} must satisfy 1 < p < inf"
        )))
    }
}
