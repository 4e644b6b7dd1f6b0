use super::haar::{haar_1d_value, haar_forward, haar_inverse, HaarFunctionSpec};
use super::{DyadicInterval, DyadicRectangle, GridFunction2D, PrefixSums, Shadow};
use crate::error::{Error, Result};

/// `Q_R f = f_R h_R`, with `f_R` taken as a direct inner product on the grid.
pub fn project_qr(f: &GridFunction2D, rect: DyadicRectangle) -> Result<GridFunction2D> {
    let depth = f.depth();
    rect.require_cancellative(depth)?;
    let h = HaarFunctionSpec::cancellative(rect);
    let mut coeff = 0.0;
    for x in rect.ix.cells(depth) {
        for y in rect.iy.cells(depth) {
            coeff += f.get(x, y) * h.value(depth, x, y);
        }
    }
    coeff *= f.cell_area();
    let mut out = GridFunction2D::zeros(depth);
    for x in rect.ix.cells(depth) {
        for y in rect.iy.cells(depth) {
            out.set(x, y, coeff * h.value(depth, x, y));
        }
    }
    Ok(out)
}

fn require_interval(interval: DyadicInterval, depth: u32) -> Result<()> {
    if interval.level < depth {
        Ok(())
    } else {
        Err(Error::FinestLevel {
            rect: DyadicRectangle::new(interval, interval),
            depth,
        })
    }
}

/// `Q_I^1`: the 1D projection onto `h_I` applied along x on every y-slice.
pub fn project_q1(f: &GridFunction2D, interval: DyadicInterval) -> Result<GridFunction2D> {
    let depth = f.depth();
    require_interval(interval, depth)?;
    let n = f.side();
    let dx = 1.0 / n as f64;
    let hx: Vec<f64> = (0..n)
        .map(|x| haar_1d_value(interval, false, depth, x))
        .collect();
    let mut out = GridFunction2D::zeros(depth);
    for y in 0..n {
        let coeff: f64 = interval
            .cells(depth)
            .map(|x| f.get(x, y) * hx[x])
            .sum::<f64>()
            * dx;
        for x in interval.cells(depth) {
            out.set(x, y, coeff * hx[x]);
        }
    }
    Ok(out)
}

/// `Q_J^2`: the 1D projection onto `h_J` applied along y on every x-slice.
pub fn project_q2(f: &GridFunction2D, interval: DyadicInterval) -> Result<GridFunction2D> {
    let depth = f.depth();
    require_interval(interval, depth)?;
    let n = f.side();
    let dy = 1.0 / n as f64;
    let hy: Vec<f64> = (0..n)
        .map(|y| haar_1d_value(interval, false, depth, y))
        .collect();
    let mut out = GridFunction2D::zeros(depth);
    for x in 0..n {
        let coeff: f64 = interval
            .cells(depth)
            .map(|y| f.get(x, y) * hy[y])
            .sum::<f64>()
            * dy;
        for y in interval.cells(depth) {
            out.set(x, y, coeff * hy[y]);
        }
    }
    Ok(out)
}

/// `P_R b = Σ_{R' ⊆ R} b_{R'} h_{R'}`, summed in coefficient space.
pub fn partial_sum_pr(b: &GridFunction2D, rect: DyadicRectangle) -> Result<GridFunction2D> {
    let depth = b.depth();
    rect.require_cancellative(depth)?;
    let mut c = haar_forward(b);
    let n = b.side();
    c.scale_slots(|kx, ky| {
        if kx == 0 || ky == 0 {
            return 0.0;
        }
        let sub = DyadicRectangle::new(
            DyadicInterval::from_heap_index(kx - 1),
            DyadicInterval::from_heap_index(ky - 1),
        );
        if rect.contains(sub) {
            1.0
        } else {
            0.0
        }
    });
    debug_assert_eq!(c.len(), n * n);
    Ok(haar_inverse(&c))
}

/// `1_R (b - ⟨b(·,s)⟩_I - ⟨b(t,·)⟩_J + ⟨b⟩_R)` evaluated from slice averages.
///
/// Equal to [`partial_sum_pr`]; the two are computed along independent paths.
pub fn oscillation_pr(b: &GridFunction2D, rect: DyadicRectangle) -> Result<GridFunction2D> {
    let depth = b.depth();
    rect.require_cancellative(depth)?;
    let sums = PrefixSums::new(b);
    let total = sums.average(rect);
    let mut out = GridFunction2D::zeros(depth);
    let finest = |c: usize| DyadicInterval {
        level: depth,
        index: c as u32,
    };
    for x in rect.ix.cells(depth) {
        for y in rect.iy.cells(depth) {
            let avg_x = sums.average(DyadicRectangle::new(rect.ix, finest(y)));
            let avg_y = sums.average(DyadicRectangle::new(finest(x), rect.iy));
            out.set(x, y, b.get(x, y) - avg_x - avg_y + total);
        }
    }
    Ok(out)
}

/// 0/1-valued grid function of a cell mask.
pub fn indicator(mask: &Shadow) -> GridFunction2D {
    let depth = mask.depth();
    let values = (0..mask.cell_count())
        .map(|k| if mask.contains_index(k) { 1.0 } else { 0.0 })
        .collect();
    GridFunction2D::from_vec_unchecked(depth, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(depth: u32, salt: usize) -> GridFunction2D {
        GridFunction2D::from_fn(depth, |x, y| {
            (((x + salt) * 31 + y * 17 + x * y * salt) % 23) as f64 / 7.0 - 1.0
        })
    }

    #[test]
    fn qr_kills_constants_and_fixes_own_haar_function() {
        let depth = 3;
        let r = DyadicRectangle::from_parts(1, 1, 2, 0).unwrap();
        assert!(
            project_qr(&GridFunction2D::constant(depth, 1.0), r)
                .unwrap()
                .max_abs()
                < 1e-15
        );
        let h = HaarFunctionSpec::cancellative(r).to_grid(depth);
        assert!(project_qr(&h, r).unwrap().max_abs_diff(&h) < 1e-14);
        let f = sample(depth, 1);
        let once = project_qr(&f, r).unwrap();
        assert!(project_qr(&once, r).unwrap().max_abs_diff(&once) < 1e-14);
    }

    #[test]
    fn qr_rejects_finest_level() {
        let r = DyadicRectangle::from_parts(2, 0, 0, 0).unwrap();
        assert!(matches!(
            project_qr(&GridFunction2D::zeros(2), r),
            Err(Error::FinestLevel { .. })
        ));
        assert!(project_q1(
            &GridFunction2D::zeros(2),
            DyadicInterval::new(2, 1).unwrap()
        )
        .is_err());
    }

    #[test]
    fn q1_annihilates_functions_of_y_only() {
        let depth = 3;
        let f = GridFunction2D::from_fn(depth, |_, y| y as f64 * 1.5 - 2.0);
        for i in DyadicInterval::cancellative(depth) {
            assert!(project_q1(&f, i).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn single_projections_are_idempotent() {
        let depth = 3;
        let f = sample(depth, 4);
        for i in DyadicInterval::cancellative(depth) {
            let a = project_q1(&f, i).unwrap();
            assert!(project_q1(&a, i).unwrap().max_abs_diff(&a) < 1e-14);
            let b = project_q2(&f, i).unwrap();
            assert!(project_q2(&b, i).unwrap().max_abs_diff(&b) < 1e-14);
        }
    }

    #[test]
    fn partial_sum_of_single_haar_function() {
        let depth = 3;
        let r0 = DyadicRectangle::from_parts(2, 1, 1, 0).unwrap();
        let h = HaarFunctionSpec::cancellative(r0).to_grid(depth);
        let big = DyadicRectangle::from_parts(1, 0, 0, 0).unwrap();
        assert!(partial_sum_pr(&h, big).unwrap().max_abs_diff(&h) < 1e-14);
        let disjoint = DyadicRectangle::from_parts(1, 1, 0, 0).unwrap();
        assert!(partial_sum_pr(&h, disjoint).unwrap().max_abs() < 1e-14);
        // R0 strictly contains R: R0's own coefficient is dropped
        let inner = DyadicRectangle::from_parts(2, 1, 2, 0).unwrap();
        assert!(partial_sum_pr(&h, inner).unwrap().max_abs() < 1e-14);
        assert!(
            partial_sum_pr(&GridFunction2D::constant(depth, 3.0), big)
                .unwrap()
                .max_abs()
                < 1e-14
        );
    }

    #[test]
    fn indicator_values() {
        assert_eq!(indicator(&Shadow::empty(1)).values(), &[0.0; 4]);
        assert_eq!(indicator(&Shadow::full(1)).values(), &[1.0; 4]);
        assert_eq!(
            indicator(&Shadow::from_bits(1, 0b0100)).values(),
            &[0.0, 0.0, 1.0, 0.0]
        );
    }
}
