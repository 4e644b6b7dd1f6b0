use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dyadic interval `[index 2^-level, (index + 1) 2^-level)` inside `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: u32,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval { level: 0, index: 0 };

    pub fn new(level: u32, index: u32) -> Result<Self> {
        if level > super::MAX_DEPTH || index >= 1u32 << level {
            return Err(Error::InvalidParameter(format!(
                "no dyadic interval with level {level} and index {index}"
            )));
        }
        Ok(Self { level, index })
    }

    /// Position in the breadth-first layout of the dyadic tree: `2^level - 1 + index`.
    #[inline]
    pub fn heap_index(self) -> usize {
        (1usize << self.level) - 1 + self.index as usize
    }

    #[inline]
    pub fn from_heap_index(k: usize) -> Self {
        let level = usize::BITS - 1 - (k + 1).leading_zeros();
        Self {
            level,
            index: (k + 1 - (1usize << level)) as u32,
        }
    }

    pub fn len(self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn start(self) -> f64 {
        self.index as f64 * self.len()
    }

    pub fn end(self) -> f64 {
        (self.index + 1) as f64 * self.len()
    }

    /// Range of finest-level cells covered at `depth`.
    #[inline]
    pub fn cells(self, depth: u32) -> std::ops::Range<usize> {
        debug_assert!(self.level <= depth);
        let width = 1usize << (depth - self.level);
        let start = self.index as usize * width;
        start..start + width
    }

    #[inline]
    pub fn contains_cell(self, depth: u32, cell: usize) -> bool {
        (cell >> (depth - self.level)) == self.index as usize
    }

    pub fn contains(self, other: DyadicInterval) -> bool {
        other.level >= self.level && (other.index >> (other.level - self.level)) == self.index
    }

    pub fn parent(self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            index: self.index / 2,
        })
    }

    pub fn children(self, depth: u32) -> Option<[Self; 2]> {
        (self.level < depth).then(|| {
            let level = self.level + 1;
            [
                Self {
                    level,
                    index: 2 * self.index,
                },
                Self {
                    level,
                    index: 2 * self.index + 1,
                },
            ]
        })
    }

    /// Every dyadic interval with level in `0..=max_level`, coarse to fine.
    pub fn all(max_level: u32) -> impl Iterator<Item = Self> + Clone {
        (0..=max_level).flat_map(|level| (0..1u32 << level).map(move |index| Self { level, index }))
    }

    /// Intervals carrying a cancellative Haar function at `depth` (levels `0..depth`).
    pub fn cancellative(depth: u32) -> impl Iterator<Item = Self> + Clone {
        (0..depth).flat_map(|level| (0..1u32 << level).map(move |index| Self { level, index }))
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start(), self.end())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RectRepr {
    lx: u32,
    ix: u32,
    ly: u32,
    iy: u32,
}

/// A dyadic rectangle `ix × iy`; the first factor runs along grid rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "RectRepr", into = "RectRepr")]
pub struct DyadicRectangle {
    pub ix: DyadicInterval,
    pub iy: DyadicInterval,
}

impl From<RectRepr> for DyadicRectangle {
    fn from(r: RectRepr) -> Self {
        Self {
            ix: DyadicInterval {
                level: r.lx,
                index: r.ix,
            },
            iy: DyadicInterval {
                level: r.ly,
                index: r.iy,
            },
        }
    }
}

impl From<DyadicRectangle> for RectRepr {
    fn from(r: DyadicRectangle) -> Self {
        Self {
            lx: r.ix.level,
            ix: r.ix.index,
            ly: r.iy.level,
            iy: r.iy.index,
        }
    }
}

impl DyadicRectangle {
    pub const UNIT: DyadicRectangle = DyadicRectangle {
        ix: DyadicInterval::ROOT,
        iy: DyadicInterval::ROOT,
    };

    pub fn new(ix: DyadicInterval, iy: DyadicInterval) -> Self {
        Self { ix, iy }
    }

    pub fn from_parts(lx: u32, ix: u32, ly: u32, iy: u32) -> Result<Self> {
        Ok(Self {
            ix: DyadicInterval::new(lx, ix)?,
            iy: DyadicInterval::new(ly, iy)?,
        })
    }

    pub fn area(self) -> f64 {
        (-((self.ix.level + self.iy.level) as f64)).exp2()
    }

    pub fn contains(self, other: DyadicRectangle) -> bool {
        self.ix.contains(other.ix) && self.iy.contains(other.iy)
    }

    #[inline]
    pub fn contains_cell(self, depth: u32, x: usize, y: usize) -> bool {
        self.ix.contains_cell(depth, x) && self.iy.contains_cell(depth, y)
    }

    /// True when both sides carry a cancellative Haar function at `depth`.
    pub fn is_cancellative(self, depth: u32) -> bool {
        self.ix.level < depth && self.iy.level < depth
    }

    pub(crate) fn require_cancellative(self, depth: u32) -> Result<()> {
        if self.is_cancellative(depth) {
            Ok(())
        } else {
            Err(Error::FinestLevel { rect: self, depth })
        }
    }

    /// Number of finest-level cells inside the rectangle.
    pub fn cell_count(self, depth: u32) -> usize {
        1usize << (2 * depth - self.ix.level - self.iy.level)
    }

    /// Every dyadic rectangle with both levels in `0..=depth`.
    pub fn all(depth: u32) -> impl Iterator<Item = Self> + Clone {
        DyadicInterval::all(depth)
            .flat_map(move |ix| DyadicInterval::all(depth).map(move |iy| Self { ix, iy }))
    }

    /// Rectangles with both levels in `0..depth`, i.e. those with an `h_R`.
    pub fn cancellative(depth: u32) -> impl Iterator<Item = Self> + Clone {
        DyadicInterval::cancellative(depth)
            .flat_map(move |ix| DyadicInterval::cancellative(depth).map(move |iy| Self { ix, iy }))
    }
}

impl fmt::Display for DyadicRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.ix, self.iy)
    }
}

/// A union of finest-level cells, stored as a bitset in row-major cell order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shadow {
    depth: u32,
    words: Vec<u64>,
}

impl Shadow {
    pub fn empty(depth: u32) -> Self {
        let cells = 1usize << (2 * depth);
        Self {
            depth,
            words: vec![0; cells.div_ceil(64)],
        }
    }

    pub fn full(depth: u32) -> Self {
        let mut s = Self::empty(depth);
        for k in 0..s.cell_count() {
            s.insert_index(k);
        }
        s
    }

    pub fn from_rect(depth: u32, rect: DyadicRectangle) -> Self {
        let mut s = Self::empty(depth);
        s.insert_rect(rect);
        s
    }

    /// Builds a shadow from the low `4^depth` bits of `bits` (bit k = cell k).
    pub fn from_bits(depth: u32, bits: u64) -> Self {
        debug_assert!(depth <= 3);
        let mut s = Self::empty(depth);
        let cells = s.cell_count();
        s.words[0] = if cells == 64 {
            bits
        } else {
            bits & ((1u64 << cells) - 1)
        };
        s
    }

    pub fn from_fn(depth: u32, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let n = 1usize << depth;
        let mut s = Self::empty(depth);
        for x in 0..n {
            for y in 0..n {
                if f(x, y) {
                    s.insert(x, y);
                }
            }
        }
        s
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> usize {
        1 << self.depth
    }

    pub fn cell_count(&self) -> usize {
        1 << (2 * self.depth)
    }

    #[inline]
    pub fn contains_index(&self, k: usize) -> bool {
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.contains_index(x * self.side() + y)
    }

    #[inline]
    pub fn insert_index(&mut self, k: usize) {
        self.words[k / 64] |= 1 << (k % 64);
    }

    #[inline]
    pub fn remove_index(&mut self, k: usize) {
        self.words[k / 64] &= !(1 << (k % 64));
    }

    #[inline]
    pub fn toggle_index(&mut self, k: usize) {
        self.words[k / 64] ^= 1 << (k % 64);
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        let k = x * self.side() + y;
        self.insert_index(k);
    }

    pub fn insert_rect(&mut self, rect: DyadicRectangle) {
        let n = self.side();
        for x in rect.ix.cells(self.depth) {
            for y in rect.iy.cells(self.depth) {
                self.insert_index(x * n + y);
            }
        }
    }

    pub fn union_with(&mut self, other: &Shadow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `true` when every cell of `other` lies in `self`.
    #[inline]
    pub fn covers(&self, other: &Shadow) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| b & !a == 0)
    }

    pub fn contains_rect(&self, rect: DyadicRectangle) -> bool {
        let n = self.side();
        rect.ix.cells(self.depth).all(|x| {
            rect.iy
                .cells(self.depth)
                .all(|y| self.contains_index(x * n + y))
        })
    }

    /// `D(Ω)` restricted to rectangles that carry an `h_R`.
    pub fn contained_rectangles(&self) -> RectangleCollection {
        RectangleCollection::from_fn(self.depth, |r| self.contains_rect(r))
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cell_count()).filter(|&k| self.contains_index(k))
    }

    /// Hex rendering of the mask read as an integer with bit k = cell k,
    /// most significant digit first, `4^(depth-1)` digits.
    pub fn to_hex(&self) -> String {
        let cells = self.cell_count();
        let digits = cells / 4;
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                if self.contains_index(4 * d + b) {
                    nibble |= 1 << b;
                }
            }
            out.push(char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let digits = s.len();
        let cells = digits * 4;
        let depth = (1..=super::MAX_DEPTH)
            .find(|&d| 1usize << (2 * d) == cells)
            .ok_or_else(|| Error::Parse(format!("mask of {digits} hex digits matches no depth")))?;
        let mut out = Self::empty(depth);
        for (pos, ch) in s.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex digit {ch:?}")))?;
            let d = digits - 1 - pos;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    out.insert_index(4 * d + b);
                }
            }
        }
        Ok(out)
    }
}

impl Serialize for Shadow {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Shadow {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Shadow::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// A set of rectangles that carry an `h_R` (both levels below the depth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleCollection {
    depth: u32,
    members: Vec<bool>,
}

impl RectangleCollection {
    pub fn empty(depth: u32) -> Self {
        let m = (1usize << depth) - 1;
        Self {
            depth,
            members: vec![false; m * m],
        }
    }

    pub fn all(depth: u32) -> Self {
        let mut c = Self::empty(depth);
        c.members.fill(true);
        c
    }

    pub fn from_fn(depth: u32, mut f: impl FnMut(DyadicRectangle) -> bool) -> Self {
        let mut c = Self::empty(depth);
        for r in DyadicRectangle::cancellative(depth) {
            if f(r) {
                c.insert(r);
            }
        }
        c
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    #[inline]
    fn slot(&self, r: DyadicRectangle) -> usize {
        let m = (1usize << self.depth) - 1;
        r.ix.heap_index() * m + r.iy.heap_index()
    }

    /// Ignores rectangles without a cancellative Haar function.
    pub fn insert(&mut self, r: DyadicRectangle) {
        if r.is_cancellative(self.depth) {
            let k = self.slot(r);
            self.members[k] = true;
        }
    }

    pub fn contains(&self, r: DyadicRectangle) -> bool {
        r.is_cancellative(self.depth) && self.members[self.slot(r)]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = DyadicRectangle> + '_ {
        DyadicRectangle::cancellative(self.depth).filter(|r| self.contains(*r))
    }

    pub fn shadow(&self) -> Shadow {
        let mut s = Shadow::empty(self.depth);
        for r in self.iter() {
            s.insert_rect(r);
        }
        s
    }

    pub fn is_subset(&self, other: &RectangleCollection) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !a || *b)
    }
}
