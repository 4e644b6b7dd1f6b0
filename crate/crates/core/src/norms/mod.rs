//! Weighted norms, square functions, the strong maximal function and the BMO family.

mod bmo;

pub use bmo::{
    bmo_objective, bmo_prod_one_weight, bmo_prod_two_weight, little_bmo, little_bmo_ratio,
    BmoResult, BmoStrategy, BmoWitness, StrategyKind, EXACT_BMO_MAX_DEPTH,
};

use crate::dyadic::{
    haar_forward, DyadicRectangle, GridFunction2D, PrefixSums, RectangleCollection,
};
use crate::error::{Error, Result};
use crate::weights::Weight;

fn check_positive_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exponent {p} must lie in (0, ∞)"
        )))
    }
}

/// `(Σ_cells |f|^p w 4^{-N})^{1/p}`.
pub fn lp_weighted_norm(f: &GridFunction2D, w: &Weight, p: f64) -> Result<f64> {
    check_positive_exponent(p)?;
    f.same_depth(w.as_grid())?;
    let s: f64 = f
        .values()
        .iter()
        .zip(w.values())
        .map(|(v, wt)| v.abs().powf(p) * wt)
        .sum();
    Ok((s * f.cell_area()).powf(1.0 / p))
}

/// Unweighted `L^p` norm.
pub fn lp_norm(f: &GridFunction2D, p: f64) -> Result<f64> {
    check_positive_exponent(p)?;
    let s: f64 = f.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((s * f.cell_area()).powf(1.0 / p))
}

fn square_sum(
    f: &GridFunction2D,
    mut term: impl FnMut(DyadicRectangle, f64) -> Option<f64>,
) -> GridFunction2D {
    let depth = f.depth();
    let n = f.side();
    let mut acc = vec![0.0; n * n];
    for (r, fr) in haar_forward(f).iter_c00() {
        let Some(t) = term(r, fr) else { continue };
        if t == 0.0 {
            continue;
        }
        let t = t / r.area();
        let ys = r.iy.cells(depth);
        for x in r.ix.cells(depth) {
            for v in &mut acc[x * n + ys.start..x * n + ys.end] {
                *v += t;
            }
        }
    }
    for v in &mut acc {
        *v = v.sqrt();
    }
    GridFunction2D::new(depth, acc).expect("finite square function")
}

/// `S_U f = (Σ_{R∈U} |f_R|² 1_R/|R|)^{1/2}`; `None` means every rectangle.
pub fn square_function(
    f: &GridFunction2D,
    u: Option<&RectangleCollection>,
) -> Result<GridFunction2D> {
    if let Some(u) = u {
        if u.depth() != f.depth() {
            return Err(Error::DepthMismatch(f.depth(), u.depth()));
        }
    }
    Ok(square_sum(f, |r, fr| match u {
        Some(u) if !u.contains(r) => None,
        _ => Some(fr * fr),
    }))
}

/// `S_w f = (Σ_R |f_R|² ⟨w⟩_R^{2/p} 1_R/|R|)^{1/2}`.
pub fn tl_square_function(f: &GridFunction2D, w: &Weight, p: f64) -> Result<GridFunction2D> {
    crate::error::check_exponent(p)?;
    f.same_depth(w.as_grid())?;
    let sums = PrefixSums::new(w.as_grid());
    Ok(square_sum(f, |r, fr| {
        Some(fr * fr * sums.average(r).powf(2.0 / p))
    }))
}

/// `M_D f(x) = sup_{R ∋ x} ⟨|f|⟩_R`.
pub fn strong_maximal(f: &GridFunction2D) -> GridFunction2D {
    let depth = f.depth();
    let sums = PrefixSums::new(&f.map(f64::abs));
    let mut out = GridFunction2D::zeros(depth);
    for r in DyadicRectangle::all(depth) {
        let avg = sums.average(r);
        for x in r.ix.cells(depth) {
            for y in r.iy.cells(depth) {
                if avg > out.get(x, y) {
                    out.set(x, y, avg);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{HaarFunctionSpec, Shadow};
    use crate::weights::random_ap_weight;

    #[test]
    fn lp_norm_basics() {
        let one = GridFunction2D::constant(3, 1.0);
        let w = Weight::uniform(3);
        for p in [0.5, 1.0, 2.0, 3.5] {
            assert!((lp_weighted_norm(&one, &w, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let h = HaarFunctionSpec::cancellative(DyadicRectangle::UNIT).to_grid(3);
        assert!((lp_weighted_norm(&h, &w, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(lp_norm(&h, 0.0).is_err());
    }

    #[test]
    fn square_function_of_single_haar_function() {
        let depth = 3;
        let r = DyadicRectangle::from_parts(1, 1, 2, 2).unwrap();
        let h = HaarFunctionSpec::cancellative(r).to_grid(depth);
        let s = square_function(&h, None).unwrap();
        let expected = GridFunction2D::from_fn(depth, |x, y| {
            if r.contains_cell(depth, x, y) {
                r.area().powf(-0.5)
            } else {
                0.0
            }
        });
        assert!(s.max_abs_diff(&expected) < 1e-13);
        assert_eq!(
            square_function(&h, Some(&RectangleCollection::empty(depth)))
                .unwrap()
                .max_abs(),
            0.0
        );
    }

    #[test]
    fn tl_reduces_to_plain_for_unit_weight() {
        let depth = 3;
        let f = GridFunction2D::from_fn(depth, |x, y| ((x * 5 + y * 3) % 7) as f64 - 3.0);
        let a = tl_square_function(&f, &Weight::uniform(depth), 3.0).unwrap();
        let b = square_function(&f, None).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn tl_single_term() {
        let depth = 2;
        let r = DyadicRectangle::from_parts(0, 0, 1, 1).unwrap();
        let w = random_ap_weight(depth, 2.0, 0.6, 8).unwrap().weight;
        let h = HaarFunctionSpec::cancellative(r).to_grid(depth);
        let p = 1.5;
        let s = tl_square_function(&h, &w, p).unwrap();
        let c = w.as_grid().average(r).powf(1.0 / p) / r.area().sqrt();
        let expected =
            GridFunction2D::from_fn(
                depth,
                |x, y| if r.contains_cell(depth, x, y) { c } else { 0.0 },
            );
        assert!(s.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn maximal_function_examples() {
        assert!(
            strong_maximal(&GridFunction2D::constant(2, 1.0))
                .max_abs_diff(&GridFunction2D::constant(2, 1.0))
                < 1e-15
        );
        let f = crate::dyadic::indicator(&Shadow::from_bits(1, 0b0001));
        let m = strong_maximal(&f);
        assert!((m.get(1, 1) - 0.25).abs() < 1e-15);
        assert!((m.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 0.5).abs() < 1e-15);
    }
}
