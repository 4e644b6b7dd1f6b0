use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{check_input, LinearOperator};
use crate::dyadic::GridFunction2D;
use crate::error::{Error, Result};

/// Largest depth accepted by [`OperatorMatrix::materialize`] (`4096 × 4096`).
pub const MAX_MATERIALIZE_DEPTH: u32 = 6;

/// Dense `4^N × 4^N` matrix acting on row-major cell-value vectors.
///
/// Column `j` is the image of the indicator of cell `j`, so
/// `vec(T f) = M vec(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    depth: u32,
    m: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn materialize<T: LinearOperator + ?Sized>(op: &T) -> Result<Self> {
        let depth = op.depth();
        if depth > MAX_MATERIALIZE_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_MATERIALIZE_DEPTH,
                what: "dense operator matrix",
            });
        }
        let size = 1usize << (2 * depth);
        let columns: Vec<Vec<f64>> = (0..size)
            .into_par_iter()
            .map(|j| {
                op.apply(&GridFunction2D::cell_indicator(depth, j))
                    .map(|g| g.into_values())
            })
            .collect::<Result<_>>()?;
        let m = DMatrix::from_fn(size, size, |i, j| columns[j][i]);
        if let Some(k) = m.iter().position(|v| !v.is_finite()) {
            let n = 1usize << depth;
            let row = k % size;
            return Err(Error::NonFinite {
                x: row / n,
                y: row % n,
            });
        }
        Ok(Self { depth, m })
    }

    pub fn from_matrix(depth: u32, m: DMatrix<f64>) -> Result<Self> {
        let size = 1usize << (2 * depth);
        if m.nrows() != size || m.ncols() != size {
            return Err(Error::Shape {
                expected: size * size,
                got: m.nrows() * m.ncols(),
            });
        }
        Ok(Self { depth, m })
    }

    pub fn identity(depth: u32) -> Self {
        let size = 1usize << (2 * depth);
        Self {
            depth,
            m: DMatrix::identity(size, size),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    /// Matrix of the formal `L²` adjoint.
    pub fn transpose(&self) -> Self {
        Self {
            depth: self.depth,
            m: self.m.transpose(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(self.depth, other.depth));
        }
        Ok(Self {
            depth: self.depth,
            m: &self.m * &other.m,
        })
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(self.depth, other.depth));
        }
        Ok(Self {
            depth: self.depth,
            m: &self.m - &other.m,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    pub fn rank(&self, eps: f64) -> usize {
        self.m.rank(eps)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }

    pub fn mul_transpose_vec(&self, v: &[f64]) -> Vec<f64> {
        self.m
            .tr_mul(&DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }
}

impl LinearOperator for OperatorMatrix {
    fn depth(&self) -> u32 {
        self.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth, f)?;
        GridFunction2D::new(self.depth, self.mul_vec(f.values()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicRectangle, HaarFunctionSpec};
    use crate::operators::{lambda_apply, Identity, Lambda, RectProjection};

    #[test]
    fn identity_materializes_to_identity() {
        let m = OperatorMatrix::materialize(&Identity { depth: 2 }).unwrap();
        assert_eq!(m, OperatorMatrix::identity(2));
    }

    #[test]
    fn top_projection_is_rank_one() {
        let q = RectProjection::new(1, DyadicRectangle::UNIT).unwrap();
        let m = OperatorMatrix::materialize(&q).unwrap();
        assert_eq!(m.rank(1e-12), 1);
        let h = HaarFunctionSpec::cancellative(DyadicRectangle::UNIT).to_grid(1);
        // every column is a multiple of the h pattern
        for j in 0..4 {
            let col: Vec<f64> = m.matrix().column(j).iter().cloned().collect();
            let c = col[0] / h.values()[0];
            for (a, b) in col.iter().zip(h.values()) {
                assert!((a - c * b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matrix_action_matches_functional_action() {
        let depth = 2;
        let b = GridFunction2D::from_fn(depth, |x, y| ((x * 7 + y * 3) % 5) as f64 - 1.0);
        let f = GridFunction2D::from_fn(depth, |x, y| ((x + y * 11) % 7) as f64 * 0.5);
        let m = OperatorMatrix::materialize(&Lambda::new(&b)).unwrap();
        let direct = lambda_apply(&b, &f).unwrap();
        assert!(m.apply(&f).unwrap().max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn depth_limit() {
        assert!(matches!(
            OperatorMatrix::materialize(&Identity { depth: 7 }),
            Err(Error::DepthTooLarge { .. })
        ));
    }
}
