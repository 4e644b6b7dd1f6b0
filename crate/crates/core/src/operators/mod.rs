//! Linear operators on grid functions.
//!
//! Every operator is an immutable value implementing [`LinearOperator`];
//! [`OperatorMatrix::materialize`] turns any of them into a dense matrix.

mod commutator;
mod matrix;
mod multiplier;
mod paraproduct;

pub use commutator::{Commutator, Compose, IteratedCommutator, SingleCommutator};
pub use matrix::{OperatorMatrix, MAX_MATERIALIZE_DEPTH};
pub use multiplier::{
    Axis, GeneralMultiplier, RestrictedProjection, SignChoice1D, SignChoice2D, SignEntry1D,
    SignEntry2D, TensorMultiplier,
};
pub use paraproduct::{
    lambda_apply, lambda_form_b, paraproduct_apply, theta_apply, Lambda, Paraproduct, Theta,
};

use crate::dyadic::{
    project_q1, project_q2, project_qr, DyadicInterval, DyadicRectangle, GridFunction2D,
};
use crate::error::{Error, Result};

pub trait LinearOperator: Send + Sync {
    fn depth(&self) -> u32;

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn depth(&self) -> u32 {
        (**self).depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        (**self).apply(f)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn depth(&self) -> u32 {
        (**self).depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        (**self).apply(f)
    }
}

pub(crate) fn check_input(depth: u32, f: &GridFunction2D) -> Result<()> {
    if f.depth() == depth {
        Ok(())
    } else {
        Err(Error::DepthMismatch(depth, f.depth()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub depth: u32,
}

impl LinearOperator for Identity {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth, f)?;
        Ok(f.clone())
    }
}

/// Pointwise multiplication by `b`.
#[derive(Debug, Clone)]
pub struct Multiplication {
    b: GridFunction2D,
}

impl Multiplication {
    pub fn new(b: GridFunction2D) -> Self {
        Self { b }
    }

    pub fn symbol(&self) -> &GridFunction2D {
        &self.b
    }
}

impl LinearOperator for Multiplication {
    fn depth(&self) -> u32 {
        self.b.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        Ok(&self.b * f)
    }
}

/// `Q_R`.
#[derive(Debug, Clone, Copy)]
pub struct RectProjection {
    pub depth: u32,
    pub rect: DyadicRectangle,
}

impl RectProjection {
    pub fn new(depth: u32, rect: DyadicRectangle) -> Result<Self> {
        rect.require_cancellative(depth)?;
        Ok(Self { depth, rect })
    }
}

impl LinearOperator for RectProjection {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth, f)?;
        project_qr(f, self.rect)
    }
}

/// `Q_I^1` (axis 1) or `Q_J^2` (axis 2).
#[derive(Debug, Clone, Copy)]
pub struct SliceProjection {
    pub depth: u32,
    pub axis: Axis,
    pub interval: DyadicInterval,
}

impl SliceProjection {
    pub fn new(depth: u32, axis: Axis, interval: DyadicInterval) -> Result<Self> {
        if interval.level >= depth {
            return Err(Error::FinestLevel {
                rect: DyadicRectangle::new(interval, interval),
                depth,
            });
        }
        Ok(Self {
            depth,
            axis,
            interval,
        })
    }
}

impl LinearOperator for SliceProjection {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth, f)?;
        match self.axis {
            Axis::X => project_q1(f, self.interval),
            Axis::Y => project_q2(f, self.interval),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_mismatch_is_reported() {
        let id = Identity { depth: 2 };
        assert!(matches!(
            id.apply(&GridFunction2D::zeros(3)),
            Err(Error::DepthMismatch(2, 3))
        ));
        let m = Multiplication::new(GridFunction2D::constant(2, 2.0));
        assert!(m.apply(&GridFunction2D::zeros(1)).is_err());
    }

    #[test]
    fn slice_projection_rejects_finest_interval() {
        let i = DyadicInterval::new(2, 0).unwrap();
        assert!(SliceProjection::new(2, Axis::X, i).is_err());
        assert!(SliceProjection::new(3, Axis::Y, i).is_ok());
    }
}
