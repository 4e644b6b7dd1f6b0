use super::{check_input, LinearOperator};
use crate::dyadic::haar::add_haar_term;
use crate::dyadic::{
    haar_forward, haar_inverse, partial_sum_pr, DyadicRectangle, GridFunction2D,
    HaarCoefficients2D, HaarFunctionSpec, HaarPyramid, HaarType, PrefixSums,
};
use crate::error::Result;

/// `Π_b^{(ε1ε2)}`; the type names the coefficient of `f` that is paired with `b_R`.
///
/// * `T11`: `Σ b_R ⟨f⟩_R h_R`
/// * `T00`: `Σ b_R f_R 1_R/|R|`
/// * `T10`: `Σ b_R f_R^{(10)} h_R^{(01)}`
/// * `T01`: `Σ b_R f_R^{(01)} h_R^{(10)}`
#[derive(Debug, Clone)]
pub struct Paraproduct {
    kind: HaarType,
    b: HaarCoefficients2D,
}

impl Paraproduct {
    pub fn new(kind: HaarType, b: &GridFunction2D) -> Self {
        Self {
            kind,
            b: haar_forward(b),
        }
    }

    pub fn kind(&self) -> HaarType {
        self.kind
    }
}

fn accumulate(kind: HaarType, b: &HaarCoefficients2D, f: &HaarPyramid, out: &mut GridFunction2D) {
    let depth = b.depth();
    match kind {
        HaarType::T11 => {
            let mut c = HaarCoefficients2D::zeros(depth);
            for (r, br) in b.iter_c00() {
                c.set_c00(r, br * f.average(r));
            }
            let g = haar_inverse(&c);
            for (o, v) in out.values_mut().iter_mut().zip(g.values()) {
                *o += v;
            }
        }
        HaarType::T00 => {
            for (r, br) in b.iter_c00() {
                add_haar_term(
                    out,
                    HaarFunctionSpec::new(r, HaarType::T11),
                    br * f.get(HaarType::T00, r),
                );
            }
        }
        HaarType::T10 => {
            for (r, br) in b.iter_c00() {
                add_haar_term(
                    out,
                    HaarFunctionSpec::new(r, HaarType::T01),
                    br * f.get(HaarType::T10, r),
                );
            }
        }
        HaarType::T01 => {
            for (r, br) in b.iter_c00() {
                add_haar_term(
                    out,
                    HaarFunctionSpec::new(r, HaarType::T10),
                    br * f.get(HaarType::T01, r),
                );
            }
        }
    }
}

impl LinearOperator for Paraproduct {
    fn depth(&self) -> u32 {
        self.b.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let mut out = GridFunction2D::zeros(f.depth());
        accumulate(self.kind, &self.b, &HaarPyramid::new(f), &mut out);
        Ok(out)
    }
}

pub fn paraproduct_apply(
    kind: HaarType,
    b: &GridFunction2D,
    f: &GridFunction2D,
) -> Result<GridFunction2D> {
    b.same_depth(f)?;
    Paraproduct::new(kind, b).apply(f)
}

/// `Λ_b`, the sum of the four paraproducts.
#[derive(Debug, Clone)]
pub struct Lambda {
    b: HaarCoefficients2D,
}

impl Lambda {
    pub fn new(b: &GridFunction2D) -> Self {
        Self { b: haar_forward(b) }
    }
}

impl LinearOperator for Lambda {
    fn depth(&self) -> u32 {
        self.b.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let pyramid = HaarPyramid::new(f);
        let mut out = GridFunction2D::zeros(f.depth());
        for kind in HaarType::ALL {
            accumulate(kind, &self.b, &pyramid, &mut out);
        }
        Ok(out)
    }
}

pub fn lambda_apply(b: &GridFunction2D, f: &GridFunction2D) -> Result<GridFunction2D> {
    b.same_depth(f)?;
    Lambda::new(b).apply(f)
}

/// `Σ_R (P_R b) f_R h_R`, evaluated term by term in cell space.
///
/// Only the `(00)` block of `f` enters, so this agrees with [`Lambda`] on
/// bi-cancellative `f`; on `[0,1)²` the other blocks of `f` feed `Π^{(11)}`,
/// `Π^{(10)}` and `Π^{(01)}` as well.
pub fn lambda_form_b(b: &GridFunction2D, f: &GridFunction2D) -> Result<GridFunction2D> {
    b.same_depth(f)?;
    let depth = f.depth();
    let fc = haar_forward(f);
    let mut out = GridFunction2D::zeros(depth);
    for (r, fr) in fc.iter_c00() {
        if fr == 0.0 {
            continue;
        }
        let prb = partial_sum_pr(b, r)?;
        let h = HaarFunctionSpec::cancellative(r);
        for x in r.ix.cells(depth) {
            for y in r.iy.cells(depth) {
                let v = out.get(x, y) + prb.get(x, y) * fr * h.value(depth, x, y);
                out.set(x, y, v);
            }
        }
    }
    Ok(out)
}

/// `Θ_b f = Σ_R (b - ⟨b⟩_R) 1_R f_R h_R`.
#[derive(Debug, Clone)]
pub struct Theta {
    b: GridFunction2D,
    sums: PrefixSums,
}

impl Theta {
    pub fn new(b: &GridFunction2D) -> Self {
        Self {
            b: b.clone(),
            sums: PrefixSums::new(b),
        }
    }

    fn add_term(&self, out: &mut GridFunction2D, r: DyadicRectangle, coeff: f64) {
        let depth = self.b.depth();
        let avg = self.sums.average(r);
        let h = HaarFunctionSpec::cancellative(r);
        for x in r.ix.cells(depth) {
            for y in r.iy.cells(depth) {
                let v = out.get(x, y) + (self.b.get(x, y) - avg) * coeff * h.value(depth, x, y);
                out.set(x, y, v);
            }
        }
    }
}

impl LinearOperator for Theta {
    fn depth(&self) -> u32 {
        self.b.depth()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        check_input(self.depth(), f)?;
        let mut out = GridFunction2D::zeros(f.depth());
        for (r, fr) in haar_forward(f).iter_c00() {
            if fr != 0.0 {
                self.add_term(&mut out, r, fr);
            }
        }
        Ok(out)
    }
}

pub fn theta_apply(b: &GridFunction2D, f: &GridFunction2D) -> Result<GridFunction2D> {
    b.same_depth(f)?;
    Theta::new(b).apply(f)
}
