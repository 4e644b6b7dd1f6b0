//! Tensor Haar system on `[0,1)²`.
//!
//! Per axis the orthonormal basis of `L²[0,1)` at depth `N` is the scaling
//! function `1_[0,1)` together with the cancellative `h_I`, `|I| ≥ 2^{1-N}`.
//! A 1D coefficient vector of length `2^N` uses slot 0 for the scaling
//! function and slot `k ≥ 1` for the interval with heap index `k - 1`.

use serde::{Deserialize, Serialize};

use super::{DyadicInterval, DyadicRectangle, GridFunction2D};

/// Cancellativity per axis; `0` = cancellative `h_I`, `1` = `h_I^{(1)} = 1_I/|I|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaarType {
    #[serde(rename = "00")]
    T00,
    #[serde(rename = "01")]
    T01,
    #[serde(rename = "10")]
    T10,
    #[serde(rename = "11")]
    T11,
}

impl HaarType {
    pub const ALL: [HaarType; 4] = [HaarType::T00, HaarType::T01, HaarType::T10, HaarType::T11];

    /// `(ε1, ε2)` with `true` meaning non-cancellative.
    pub fn flags(self) -> (bool, bool) {
        match self {
            HaarType::T00 => (false, false),
            HaarType::T01 => (false, true),
            HaarType::T10 => (true, false),
            HaarType::T11 => (true, true),
        }
    }

    fn slot(self) -> usize {
        match self {
            HaarType::T00 => 0,
            HaarType::T01 => 1,
            HaarType::T10 => 2,
            HaarType::T11 => 3,
        }
    }
}

/// One member `h_R^{(ε1ε2)}` of the tensor Haar family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarFunctionSpec {
    pub rect: DyadicRectangle,
    #[serde(rename = "type")]
    pub kind: HaarType,
}

/// Value of `h_I` (cancellative) or `h_I^{(1)} = 1_I/|I|` on finest cell `cell`.
#[inline]
pub fn haar_1d_value(
    interval: DyadicInterval,
    noncancellative: bool,
    depth: u32,
    cell: usize,
) -> f64 {
    if !interval.contains_cell(depth, cell) {
        return 0.0;
    }
    if noncancellative {
        (interval.level as f64).exp2()
    } else {
        let scale = (interval.level as f64 / 2.0).exp2();
        // right half positive
        let half = depth - interval.level - 1;
        if (cell >> half) & 1 == 1 {
            scale
        } else {
            -scale
        }
    }
}

impl HaarFunctionSpec {
    pub fn new(rect: DyadicRectangle, kind: HaarType) -> Self {
        Self { rect, kind }
    }

    pub fn cancellative(rect: DyadicRectangle) -> Self {
        Self::new(rect, HaarType::T00)
    }

    pub fn value(&self, depth: u32, x: usize, y: usize) -> f64 {
        let (e1, e2) = self.kind.flags();
        haar_1d_value(self.rect.ix, e1, depth, x) * haar_1d_value(self.rect.iy, e2, depth, y)
    }

    pub fn to_grid(&self, depth: u32) -> GridFunction2D {
        GridFunction2D::from_fn(depth, |x, y| self.value(depth, x, y))
    }
}

/// In-place orthonormal 1D Haar analysis of `2^N` cell values.
pub fn forward_1d(buf: &mut [f64], scratch: &mut Vec<f64>) {
    let n = buf.len();
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    scratch.clear();
    scratch.extend(buf.iter().map(|v| v * inv_sqrt_n));
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (scratch[2 * i], scratch[2 * i + 1]);
            buf[half + i] = (b - a) * std::f64::consts::FRAC_1_SQRT_2;
            scratch[i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
        }
        len = half;
    }
    buf[0] = scratch[0];
}

/// Inverse of [`forward_1d`].
pub fn inverse_1d(buf: &mut [f64], scratch: &mut Vec<f64>) {
    let n = buf.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    scratch[0] = buf[0];
    let mut len = 1;
    while len < n {
        for i in (0..len).rev() {
            let a = scratch[i];
            let d = buf[len + i];
            scratch[2 * i] = (a - d) * std::f64::consts::FRAC_1_SQRT_2;
            scratch[2 * i + 1] = (a + d) * std::f64::consts::FRAC_1_SQRT_2;
        }
        len *= 2;
    }
    let sqrt_n = (n as f64).sqrt();
    for (b, s) in buf.iter_mut().zip(scratch.iter()) {
        *b = s * sqrt_n;
    }
}

/// Coefficients of a grid function in the tensor Haar basis.
///
/// Stored as a `2^N × 2^N` array in the 1D slot layout per axis, so the
/// `(00)` block is `kx, ky ≥ 1`, the `(10)` block (scaling function in x)
/// is `kx = 0, ky ≥ 1`, the `(01)` block is `kx ≥ 1, ky = 0`, and `(11)`
/// is the single global-average slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoefficients2D {
    depth: u32,
    coeffs: Vec<f64>,
}

impl HaarCoefficients2D {
    pub fn zeros(depth: u32) -> Self {
        Self {
            depth,
            coeffs: vec![0.0; 1 << (2 * depth)],
        }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn side(&self) -> usize {
        1 << self.depth
    }

    /// Raw array in slot layout, row = x slot.
    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    fn idx(&self, kx: usize, ky: usize) -> usize {
        kx * self.side() + ky
    }

    /// `f_R = ⟨f, h_R⟩` for a rectangle with both levels below the depth.
    pub fn c00(&self, rect: DyadicRectangle) -> f64 {
        debug_assert!(rect.is_cancellative(self.depth));
        self.coeffs[self.idx(rect.ix.heap_index() + 1, rect.iy.heap_index() + 1)]
    }

    pub fn set_c00(&mut self, rect: DyadicRectangle, v: f64) {
        let k = self.idx(rect.ix.heap_index() + 1, rect.iy.heap_index() + 1);
        self.coeffs[k] = v;
    }

    /// `⟨f, 1_[0,1) ⊗ h_J⟩`.
    pub fn c10(&self, iy: DyadicInterval) -> f64 {
        self.coeffs[self.idx(0, iy.heap_index() + 1)]
    }

    /// `⟨f, h_I ⊗ 1_[0,1)⟩`.
    pub fn c01(&self, ix: DyadicInterval) -> f64 {
        self.coeffs[self.idx(ix.heap_index() + 1, 0)]
    }

    /// `⟨f, 1_[0,1)²⟩ = ∫ f`.
    pub fn c11(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Iterates over `(R, f_R)` for every bi-cancellative coefficient.
    pub fn iter_c00(&self) -> impl Iterator<Item = (DyadicRectangle, f64)> + '_ {
        DyadicRectangle::cancellative(self.depth).map(move |r| (r, self.c00(r)))
    }

    /// Scales every slot by `factor(kx, ky)` where slot 0 is the scaling function.
    pub(crate) fn scale_slots(&mut self, factor: impl Fn(usize, usize) -> f64) {
        let n = self.side();
        for kx in 0..n {
            for ky in 0..n {
                self.coeffs[kx * n + ky] *= factor(kx, ky);
            }
        }
    }

    /// Drops every block except `(00)`.
    pub fn bicancellative_part(&self) -> Self {
        let mut out = self.clone();
        out.scale_slots(|kx, ky| if kx > 0 && ky > 0 { 1.0 } else { 0.0 });
        out
    }
}

pub fn haar_forward(f: &GridFunction2D) -> HaarCoefficients2D {
    let depth = f.depth();
    let n = f.side();
    let mut coeffs = f.values().to_vec();
    let mut scratch = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    // along y (contiguous rows)
    for row in coeffs.chunks_mut(n) {
        forward_1d(row, &mut scratch);
    }
    // along x
    for ky in 0..n {
        for kx in 0..n {
            col[kx] = coeffs[kx * n + ky];
        }
        forward_1d(&mut col, &mut scratch);
        for kx in 0..n {
            coeffs[kx * n + ky] = col[kx];
        }
    }
    HaarCoefficients2D { depth, coeffs }
}

pub fn haar_inverse(c: &HaarCoefficients2D) -> GridFunction2D {
    let depth = c.depth;
    let n = c.side();
    let mut values = c.coeffs.clone();
    let mut scratch = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    for ky in 0..n {
        for kx in 0..n {
            col[kx] = values[kx * n + ky];
        }
        inverse_1d(&mut col, &mut scratch);
        for kx in 0..n {
            values[kx * n + ky] = col[kx];
        }
    }
    for row in values.chunks_mut(n) {
        inverse_1d(row, &mut scratch);
    }
    GridFunction2D::from_vec_unchecked(depth, values)
}

/// 1D pyramid: `⟨v, 1_I/|I|⟩` for every interval and `⟨v, h_I⟩` for intervals
/// above the finest level, in heap layout.
fn pyramid_1d(v: &[f64], depth: u32, nc: &mut [f64], c: &mut [f64]) {
    let n = v.len();
    let leaves = n - 1;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    // L²-normalized sums first
    for (j, val) in v.iter().enumerate() {
        nc[leaves + j] = val * inv_sqrt_n;
        c[leaves + j] = 0.0;
    }
    for level in (0..depth).rev() {
        let base = (1usize << level) - 1;
        let child = (1usize << (level + 1)) - 1;
        for i in 0..1usize << level {
            let (a, b) = (nc[child + 2 * i], nc[child + 2 * i + 1]);
            nc[base + i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
            c[base + i] = (b - a) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    for level in 0..=depth {
        let scale = (level as f64 / 2.0).exp2();
        let base = (1usize << level) - 1;
        for v in &mut nc[base..base + (1usize << level)] {
            *v *= scale;
        }
    }
}

/// Generalized coefficients `f_R^{(ε1ε2)} = ⟨f, h_I^{(ε1)} ⊗ h_J^{(ε2)}⟩` for
/// every dyadic rectangle and every type, with `h_I^{(1)} = 1_I/|I|`, so that
/// `f_R^{(11)} = ⟨f⟩_R`. Cancellative entries at the finest level are zero.
#[derive(Debug, Clone)]
pub struct HaarPyramid {
    depth: u32,
    m: usize,
    blocks: [Vec<f64>; 4],
}

impl HaarPyramid {
    pub fn new(f: &GridFunction2D) -> Self {
        let depth = f.depth();
        let n = f.side();
        let m = 2 * n - 1;
        // stage 1: along y for each row x
        let mut ync = vec![0.0; n * m];
        let mut yc = vec![0.0; n * m];
        for x in 0..n {
            let row = &f.values()[x * n..(x + 1) * n];
            let (a, b) = (x * m, (x + 1) * m);
            let (nc_row, c_row) = (&mut ync[a..b], &mut yc[a..b]);
            pyramid_1d(row, depth, nc_row, c_row);
        }
        // stage 2: along x for each y-slot
        let mut blocks = [
            vec![0.0; m * m],
            vec![0.0; m * m],
            vec![0.0; m * m],
            vec![0.0; m * m],
        ];
        let mut col = vec![0.0; n];
        let mut nc = vec![0.0; m];
        let mut c = vec![0.0; m];
        for (ysrc, y_noncanc) in [(&yc, false), (&ync, true)] {
            for hy in 0..m {
                for x in 0..n {
                    col[x] = ysrc[x * m + hy];
                }
                pyramid_1d(&col, depth, &mut nc, &mut c);
                for hx in 0..m {
                    let (t_c, t_nc) = if y_noncanc {
                        (HaarType::T01, HaarType::T11)
                    } else {
                        (HaarType::T00, HaarType::T10)
                    };
                    blocks[t_c.slot()][hx * m + hy] = c[hx];
                    blocks[t_nc.slot()][hx * m + hy] = nc[hx];
                }
            }
        }
        Self { depth, m, blocks }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn get(&self, kind: HaarType, rect: DyadicRectangle) -> f64 {
        self.blocks[kind.slot()][rect.ix.heap_index() * self.m + rect.iy.heap_index()]
    }

    /// `⟨f⟩_R`.
    #[inline]
    pub fn average(&self, rect: DyadicRectangle) -> f64 {
        self.get(HaarType::T11, rect)
    }
}

/// Adds `coeff · h_R^{(ε1ε2)}` to `out` cellwise.
pub(crate) fn add_haar_term(out: &mut GridFunction2D, spec: HaarFunctionSpec, coeff: f64) {
    if coeff == 0.0 {
        return;
    }
    let depth = out.depth();
    let n = out.side();
    let (e1, e2) = spec.kind.flags();
    let ys = spec.rect.iy.cells(depth);
    let yv: Vec<f64> = ys
        .clone()
        .map(|y| haar_1d_value(spec.rect.iy, e2, depth, y))
        .collect();
    let values = out.values_mut();
    for x in spec.rect.ix.cells(depth) {
        let cx = coeff * haar_1d_value(spec.rect.ix, e1, depth, x);
        let row = &mut values[x * n + ys.start..x * n + ys.end];
        for (v, hy) in row.iter_mut().zip(&yv) {
            *v += cx * hy;
        }
    }
}
