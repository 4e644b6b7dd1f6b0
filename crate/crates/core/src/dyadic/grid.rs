use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};

use super::{DyadicRectangle, Shadow, MAX_DEPTH};
use crate::error::{Error, Result};

/// Piecewise-constant function on the `2^N × 2^N` dyadic grid of `[0,1)²`.
///
/// Values are cell averages stored row-major with the x-index as the row:
/// cell `(x, y)` is `[x 2^-N, (x+1) 2^-N) × [y 2^-N, (y+1) 2^-N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    depth: u32,
    values: Vec<f64>,
}

pub(crate) fn check_depth(depth: u32) -> Result<()> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(Error::InvalidDepth(depth))
    }
}

impl GridFunction2D {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        let n = 1usize << depth;
        if values.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: k / n, y: k % n });
        }
        Ok(Self { depth, values })
    }

    /// Constructor for values already known to be finite and correctly sized.
    pub(crate) fn from_vec_unchecked(depth: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1 << (2 * depth));
        Self { depth, values }
    }

    pub fn zeros(depth: u32) -> Self {
        Self::constant(depth, 0.0)
    }

    pub fn constant(depth: u32, c: f64) -> Self {
        Self {
            depth,
            values: vec![c; 1 << (2 * depth)],
        }
    }

    pub fn from_fn(depth: u32, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = 1usize << depth;
        let mut values = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                values.push(f(x, y));
            }
        }
        Self { depth, values }
    }

    /// Indicator of a single finest-level cell, `k = x·2^N + y`.
    pub fn cell_indicator(depth: u32, k: usize) -> Self {
        let mut g = Self::zeros(depth);
        g.values[k] = 1.0;
        g
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> usize {
        1 << self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lebesgue measure of one finest-level cell.
    pub fn cell_area(&self) -> f64 {
        (-2.0 * self.depth as f64).exp2()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.side() + y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let n = self.side();
        self.values[x * n + y] = v;
    }

    pub fn same_depth(&self, other: &GridFunction2D) -> Result<()> {
        if self.depth == other.depth {
            Ok(())
        } else {
            Err(Error::DepthMismatch(self.depth, other.depth))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridFunction2D, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.depth, other.depth);
        Self {
            depth: self.depth,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Unweighted `L²` pairing `∫ f g`.
    pub fn inner(&self, other: &GridFunction2D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction2D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `⟨f⟩_R`, the arithmetic mean of the cells inside `rect`.
    pub fn average(&self, rect: DyadicRectangle) -> f64 {
        let n = self.side();
        let mut s = 0.0;
        for x in rect.ix.cells(self.depth) {
            for y in rect.iy.cells(self.depth) {
                s += self.values[x * n + y];
            }
        }
        s / rect.cell_count(self.depth) as f64
    }

    pub fn restrict(&self, mask: &Shadow) -> Self {
        Self {
            depth: self.depth,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| if mask.contains_index(k) { v } else { 0.0 })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# depth={}", self.depth)?;
        let n = self.side();
        let mut line = String::new();
        for row in self.values.chunks(n) {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{v}").unwrap();
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??;
        let depth: u32 = header
            .trim()
            .strip_prefix("# depth=")
            .ok_or_else(|| Error::Parse(format!("expected '# depth=N' header, got {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad depth: {e}")))?;
        check_depth(depth)?;
        let n = 1usize << depth;
        let mut values = Vec::with_capacity(n * n);
        let mut rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("row {rows}: {e}")))?;
                values.push(v);
            }
            if values.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {rows} has {} columns, expected {n}",
                    values.len() - before
                )));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse(format!("expected {n} rows, got {rows}")));
        }
        Self::new(depth, values)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::read_csv(s.as_bytes())
    }
}

impl Add for &GridFunction2D {
    type Output = GridFunction2D;
    fn add(self, rhs: &GridFunction2D) -> GridFunction2D {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction2D {
    type Output = GridFunction2D;
    fn sub(self, rhs: &GridFunction2D) -> GridFunction2D {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Pointwise product, i.e. multiplication by a symbol.
impl Mul for &GridFunction2D {
    type Output = GridFunction2D;
    fn mul(self, rhs: &GridFunction2D) -> GridFunction2D {
        self.zip_map(rhs, |a, b| a * b)
    }
}

/// Summed-area table giving O(1) rectangle sums.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    depth: u32,
    table: Vec<f64>,
}

impl PrefixSums {
    pub fn new(f: &GridFunction2D) -> Self {
        let n = f.side();
        let m = n + 1;
        let mut table = vec![0.0; m * m];
        for x in 0..n {
            let mut row = 0.0;
            for y in 0..n {
                row += f.get(x, y);
                table[(x + 1) * m + y + 1] = table[x * m + y + 1] + row;
            }
        }
        Self {
            depth: f.depth(),
            table,
        }
    }

    pub fn sum(&self, rect: DyadicRectangle) -> f64 {
        let m = (1usize << self.depth) + 1;
        let xs = rect.ix.cells(self.depth);
        let ys = rect.iy.cells(self.depth);
        self.table[xs.end * m + ys.end]
            - self.table[xs.start * m + ys.end]
            - self.table[xs.end * m + ys.start]
            + self.table[xs.start * m + ys.start]
    }

    pub fn average(&self, rect: DyadicRectangle) -> f64 {
        self.sum(rect) / rect.cell_count(self.depth) as f64
    }
}
