//! Dyadic biparameter Haar calculus on finite grids.
//!
//! Functions live on the dyadic grid of `[0,1)²` at a fixed depth `N`.
//! The crate provides the tensor Haar transform, paraproducts and Haar
//! multipliers as linear operators, weighted square functions, `A_p`
//! characteristics, Bloom product BMO norms (exact and heuristic), operator
//! norms between weighted `L^p` spaces, and the experiment drivers used by
//! the `haar-bloom` binary.

pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod norms;
pub mod operators;
pub mod opnorm;
pub mod weights;

pub use dyadic::{
    DyadicInterval, DyadicRectangle, GridFunction2D, HaarCoefficients2D, HaarType,
    RectangleCollection, Shadow,
};
pub use error::{Error, Result};
pub use weights::Weight;

/// Identity tolerance for exact algebraic relations in f64.
pub const IDENTITY_TOL: f64 = 1e-12;
