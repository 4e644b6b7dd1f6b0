//! Finite dyadic geometry on `[0,1)²`, tensor Haar transforms and elementary projections.

mod geometry;
mod grid;
pub mod haar;
mod projection;

pub use geometry::{DyadicInterval, DyadicRectangle, RectangleCollection, Shadow};
pub use grid::{GridFunction2D, PrefixSums};
pub use haar::{
    haar_forward, haar_inverse, HaarCoefficients2D, HaarFunctionSpec, HaarPyramid, HaarType,
};
pub use projection::{
    indicator, oscillation_pr, partial_sum_pr, project_q1, project_q2, project_qr,
};

pub(crate) use grid::check_depth;

/// Largest supported grid depth (`4^10` cells).
pub const MAX_DEPTH: u32 = 10;
