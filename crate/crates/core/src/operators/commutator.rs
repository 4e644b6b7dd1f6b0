use super::{
    check_input, Axis, GeneralMultiplier, LinearOperator, Multiplication, SignChoice1D,
    SignChoice2D, TensorMultiplier,
};
use crate::dyadic::GridFunction2D;
use crate::error::{Error, Result};

fn same_depth(a: u32, b: u32) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DepthMismatch(a, b))
    }
}

/// `[A, B] f = A(B f) - B(A f)`.
#[derive(Debug, Clone)]
pub struct Commutator<A, B> {
    a: A,
    b: B,
}

impl<A: LinearOperator, B: LinearOperator> Commutator<A, B> {
    pub fn new(a: A, b: B) -> Result<Self> {
        same_depth(a.depth(), b.depth())?;
        Ok(Self { a, b })
    }
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for Commutator<A, B> {
    fn depth(&self) -> u32 {
        self.a.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let ab = self.a.apply(&self.b.apply(f)?)?;
        let ba = self.b.apply(&self.a.apply(f)?)?;
        Ok(&ab - &ba)
    }
}

/// `A ∘ B`.
#[derive(Debug, Clone)]
pub struct Compose<A, B> {
    outer: A,
    inner: B,
}

impl<A: LinearOperator, B: LinearOperator> Compose<A, B> {
    pub fn new(outer: A, inner: B) -> Result<Self> {
        same_depth(outer.depth(), inner.depth())?;
        Ok(Self { outer, inner })
    }
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for Compose<A, B> {
    fn depth(&self) -> u32 {
        self.outer.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.outer.apply(&self.inner.apply(f)?)
    }
}

/// `[T_{σ1}^1, [T_{σ2}^2, b]]`, evaluated as written, innermost first.
#[derive(Debug, Clone)]
pub struct IteratedCommutator {
    inner: Commutator<TensorMultiplier, Commutator<TensorMultiplier, Multiplication>>,
}

impl IteratedCommutator {
    pub fn new(b: &GridFunction2D, sigma1: SignChoice1D, sigma2: SignChoice1D) -> Result<Self> {
        same_depth(b.depth(), sigma1.depth())?;
        let t2 = TensorMultiplier::new(Axis::Y, sigma2);
        let t1 = TensorMultiplier::new(Axis::X, sigma1);
        let inner = Commutator::new(t2, Multiplication::new(b.clone()))?;
        Ok(Self {
            inner: Commutator::new(t1, inner)?,
        })
    }
}

impl LinearOperator for IteratedCommutator {
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.inner.apply(f)
    }
}

/// `[T_σ, b]` for a multiplier over rectangles.
#[derive(Debug, Clone)]
pub struct SingleCommutator {
    inner: Commutator<GeneralMultiplier, Multiplication>,
}

impl SingleCommutator {
    pub fn new(b: &GridFunction2D, sigma: SignChoice2D) -> Result<Self> {
        Ok(Self {
            inner: Commutator::new(
                GeneralMultiplier::new(sigma),
                Multiplication::new(b.clone()),
            )?,
        })
    }
}

impl LinearOperator for SingleCommutator {
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.inner.apply(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_symbol_commutes() {
        let depth = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = GridFunction2D::constant(depth, -2.5);
        let f = GridFunction2D::from_fn(depth, |x, y| (x * 4 + y) as f64 - 7.0);
        let s1 = SignChoice1D::random(depth, &mut rng, false).unwrap();
        let s2 = SignChoice1D::random(depth, &mut rng, false).unwrap();
        let c = IteratedCommutator::new(&b, s1, s2).unwrap();
        assert!(c.apply(&f).unwrap().max_abs() < 1e-13);
        let s = SingleCommutator::new(&b, SignChoice2D::random(depth, &mut rng, true).unwrap())
            .unwrap();
        assert!(s.apply(&f).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn zero_outer_sign_gives_zero() {
        let depth = 2;
        let b = GridFunction2D::from_fn(depth, |x, y| (x * y) as f64);
        let f = GridFunction2D::from_fn(depth, |x, y| (x + 2 * y) as f64);
        let c = IteratedCommutator::new(
            &b,
            SignChoice1D::constant(depth, 0).unwrap(),
            SignChoice1D::constant(depth, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(c.apply(&f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mismatched_depths_rejected() {
        let b = GridFunction2D::zeros(3);
        let s = SignChoice1D::constant(2, 1).unwrap();
        assert!(IteratedCommutator::new(&b, s.clone(), s).is_err());
    }
}
