use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, LinearOperator};
use crate::dyadic::{
    check_depth, haar_forward, haar_inverse, DyadicInterval, DyadicRectangle, GridFunction2D,
    RectangleCollection, Shadow,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    /// First variable (`T^1`, `Q^1`).
    X,
    /// Second variable.
    Y,
}

fn check_sign(s: i8) -> Result<i8> {
    if (-1..=1).contains(&s) {
        Ok(s)
    } else {
        Err(Error::InvalidParameter(format!(
            "sign {s} not in {{-1, 0, 1}}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignEntry1D {
    pub level: u32,
    pub index: u32,
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignEntry2D {
    pub lx: u32,
    pub ix: u32,
    pub ly: u32,
    pub iy: u32,
    pub sign: i8,
}

/// `σ: D → {-1, 0, 1}` on the `2^N - 1` cancellative intervals, by heap index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignChoice1D {
    depth: u32,
    signs: Vec<i8>,
}

impl SignChoice1D {
    pub fn constant(depth: u32, sign: i8) -> Result<Self> {
        check_depth(depth)?;
        Ok(Self {
            depth,
            signs: vec![check_sign(sign)?; (1 << depth) - 1],
        })
    }

    /// `±1` choice: bit `k` of `bits` set means `+1` on heap index `k`.
    pub fn from_bits(depth: u32, bits: u64) -> Result<Self> {
        check_depth(depth)?;
        let m = (1usize << depth) - 1;
        if m > 64 {
            return Err(Error::DepthTooLarge {
                depth,
                max: 6,
                what: "bit-encoded sign choice",
            });
        }
        Ok(Self {
            depth,
            signs: (0..m)
                .map(|k| if (bits >> k) & 1 == 1 { 1 } else { -1 })
                .collect(),
        })
    }

    pub fn from_signs(depth: u32, signs: Vec<i8>) -> Result<Self> {
        check_depth(depth)?;
        if signs.len() != (1 << depth) - 1 {
            return Err(Error::Shape {
                expected: (1 << depth) - 1,
                got: signs.len(),
            });
        }
        for &s in &signs {
            check_sign(s)?;
        }
        Ok(Self { depth, signs })
    }

    /// Uniform over `{-1, 1}`, or over `{-1, 0, 1}` with `allow_zero`.
    pub fn random<R: Rng + ?Sized>(depth: u32, rng: &mut R, allow_zero: bool) -> Result<Self> {
        check_depth(depth)?;
        let signs = (0..(1usize << depth) - 1)
            .map(|_| {
                if allow_zero {
                    rng.random_range(-1i8..=1)
                } else if rng.random_bool(0.5) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Ok(Self { depth, signs })
    }

    pub fn from_entries(depth: u32, entries: &[SignEntry1D]) -> Result<Self> {
        let mut out = Self::constant(depth, 0)?;
        for e in entries {
            let i = DyadicInterval::new(e.level, e.index)?;
            out.set(i, e.sign)?;
        }
        Ok(out)
    }

    pub fn entries(&self) -> Vec<SignEntry1D> {
        DyadicInterval::cancellative(self.depth)
            .map(|i| SignEntry1D {
                level: i.level,
                index: i.index,
                sign: self.get(i),
            })
            .collect()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `0` for the finest level and outside the grid.
    pub fn get(&self, i: DyadicInterval) -> i8 {
        self.signs.get(i.heap_index()).copied().unwrap_or(0)
    }

    pub fn set(&mut self, i: DyadicInterval, sign: i8) -> Result<()> {
        let k = i.heap_index();
        if i.level >= self.depth {
            return Err(Error::FinestLevel {
                rect: DyadicRectangle::new(i, i),
                depth: self.depth,
            });
        }
        self.signs[k] = check_sign(sign)?;
        Ok(())
    }
}

impl Serialize for SignChoice1D {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

/// `σ` on cancellative rectangles, indexed `heap(I)·(2^N - 1) + heap(J)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignChoice2D {
    depth: u32,
    signs: Vec<i8>,
}

impl SignChoice2D {
    fn m(depth: u32) -> usize {
        (1usize << depth) - 1
    }

    pub fn constant(depth: u32, sign: i8) -> Result<Self> {
        check_depth(depth)?;
        let m = Self::m(depth);
        Ok(Self {
            depth,
            signs: vec![check_sign(sign)?; m * m],
        })
    }

    /// `σ(I×J) = σ1(I) σ2(J)`.
    pub fn tensor(s1: &SignChoice1D, s2: &SignChoice1D) -> Result<Self> {
        if s1.depth != s2.depth {
            return Err(Error::DepthMismatch(s1.depth, s2.depth));
        }
        let mut signs = Vec::with_capacity(s1.signs.len() * s2.signs.len());
        for a in &s1.signs {
            for b in &s2.signs {
                signs.push(a * b);
            }
        }
        Ok(Self {
            depth: s1.depth,
            signs,
        })
    }

    pub fn random<R: Rng + ?Sized>(depth: u32, rng: &mut R, allow_zero: bool) -> Result<Self> {
        check_depth(depth)?;
        let m = Self::m(depth);
        let signs = (0..m * m)
            .map(|_| {
                if allow_zero {
                    rng.random_range(-1i8..=1)
                } else if rng.random_bool(0.5) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Ok(Self { depth, signs })
    }

    pub fn from_entries(depth: u32, entries: &[SignEntry2D]) -> Result<Self> {
        let mut out = Self::constant(depth, 0)?;
        for e in entries {
            out.set(DyadicRectangle::from_parts(e.lx, e.ix, e.ly, e.iy)?, e.sign)?;
        }
        Ok(out)
    }

    pub fn entries(&self) -> Vec<SignEntry2D> {
        DyadicRectangle::cancellative(self.depth)
            .map(|r| SignEntry2D {
                lx: r.ix.level,
                ix: r.ix.index,
                ly: r.iy.level,
                iy: r.iy.index,
                sign: self.get(r),
            })
            .collect()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn get(&self, r: DyadicRectangle) -> i8 {
        if !r.is_cancellative(self.depth) {
            return 0;
        }
        self.signs[r.ix.heap_index() * Self::m(self.depth) + r.iy.heap_index()]
    }

    pub fn set(&mut self, r: DyadicRectangle, sign: i8) -> Result<()> {
        r.require_cancellative(self.depth)?;
        let k = r.ix.heap_index() * Self::m(self.depth) + r.iy.heap_index();
        self.signs[k] = check_sign(sign)?;
        Ok(())
    }
}

impl Serialize for SignChoice2D {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

/// `T_σ^1 f = Σ_I σ(I) Q_I^1 f` or its second-axis counterpart.
///
/// Components carrying the scaling function on the designated axis are
/// annihilated.
#[derive(Debug, Clone)]
pub struct TensorMultiplier {
    axis: Axis,
    sigma: SignChoice1D,
}

impl TensorMultiplier {
    pub fn new(axis: Axis, sigma: SignChoice1D) -> Self {
        Self { axis, sigma }
    }

    pub fn sigma(&self) -> &SignChoice1D {
        &self.sigma
    }
}

impl LinearOperator for TensorMultiplier {
    fn depth(&self) -> u32 {
        self.sigma.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let mut c = haar_forward(f);
        let signs = &self.sigma.signs;
        let factor = |k: usize| if k == 0 { 0.0 } else { signs[k - 1] as f64 };
        match self.axis {
            Axis::X => c.scale_slots(|kx, _| factor(kx)),
            Axis::Y => c.scale_slots(|_, ky| factor(ky)),
        }
        Ok(haar_inverse(&c))
    }
}

/// `T_σ f = Σ_R σ(R) f_R h_R`.
#[derive(Debug, Clone)]
pub struct GeneralMultiplier {
    sigma: SignChoice2D,
}

impl GeneralMultiplier {
    pub fn new(sigma: SignChoice2D) -> Self {
        Self { sigma }
    }
}

impl LinearOperator for GeneralMultiplier {
    fn depth(&self) -> u32 {
        self.sigma.depth
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let m = SignChoice2D::m(self.depth());
        let signs = &self.sigma.signs;
        let mut c = haar_forward(f);
        c.scale_slots(|kx, ky| {
            if kx == 0 || ky == 0 {
                0.0
            } else {
                signs[(kx - 1) * m + ky - 1] as f64
            }
        });
        Ok(haar_inverse(&c))
    }
}

/// `P_U f = Σ_{R∈U} f_R h_R`; for a shadow `Ω`, `U = D(Ω)`.
#[derive(Debug, Clone)]
pub struct RestrictedProjection {
    members: RectangleCollection,
}

impl RestrictedProjection {
    pub fn from_collection(u: RectangleCollection) -> Self {
        Self { members: u }
    }

    pub fn from_shadow(omega: &Shadow) -> Self {
        Self {
            members: omega.contained_rectangles(),
        }
    }

    pub fn collection(&self) -> &RectangleCollection {
        &self.members
    }
}

impl LinearOperator for RestrictedProjection {
    fn depth(&self) -> u32 {
        self.members.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let mut c = haar_forward(f);
        c.scale_slots(|kx, ky| {
            if kx == 0 || ky == 0 {
                return 0.0;
            }
            let r = DyadicRectangle::new(
                DyadicInterval::from_heap_index(kx - 1),
                DyadicInterval::from_heap_index(ky - 1),
            );
            if self.members.contains(r) {
                1.0
            } else {
                0.0
            }
        });
        Ok(haar_inverse(&c))
    }
}
