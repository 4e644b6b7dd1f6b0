//! Dyadic biparameter `A_p` weights: characteristics, conjugates, Bloom weights
//! and a seeded cascade generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_depth, DyadicRectangle, GridFunction2D, PrefixSums};
use crate::error::{check_exponent, Error, Result};

/// Lower and upper clamp applied by the generator.
pub const WEIGHT_FLOOR: f64 = 1e-8;
pub const WEIGHT_CEIL: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRole {
    Mu,
    Lambda,
    Nu,
    Generic,
}

/// A strictly positive grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    values: GridFunction2D,
    role: WeightRole,
}

impl Weight {
    pub fn new(values: GridFunction2D, role: WeightRole) -> Result<Self> {
        let n = values.side();
        if let Some(k) = values.values().iter().position(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::NonPositiveWeight { x: k / n, y: k % n });
        }
        Ok(Self { values, role })
    }

    pub fn uniform(depth: u32) -> Self {
        Self {
            values: GridFunction2D::constant(depth, 1.0),
            role: WeightRole::Generic,
        }
    }

    pub fn with_role(mut self, role: WeightRole) -> Self {
        self.role = role;
        self
    }

    pub fn role(&self) -> WeightRole {
        self.role
    }

    pub fn depth(&self) -> u32 {
        self.values.depth()
    }

    pub fn as_grid(&self) -> &GridFunction2D {
        &self.values
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    /// Pointwise power `w^e`; stays a weight.
    pub fn powf(&self, e: f64) -> Weight {
        Weight {
            values: self.values.map(|v| v.powf(e)),
            role: WeightRole::Generic,
        }
    }

    /// `w(E)` for a cell mask.
    pub fn measure(&self, mask: &crate::dyadic::Shadow) -> f64 {
        mask.cells().map(|k| self.values.values()[k]).sum::<f64>() * self.values.cell_area()
    }

    pub fn measure_rect(&self, rect: DyadicRectangle) -> f64 {
        self.values.average(rect) * rect.area()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub characteristic: f64,
    pub rect: DyadicRectangle,
}

/// `[w]_{A_p}` over every dyadic rectangle of the grid, finest cells included.
pub fn ap_characteristic(w: &Weight, p: f64) -> Result<ApReport> {
    check_exponent(p)?;
    let depth = w.depth();
    let direct = PrefixSums::new(w.as_grid());
    let dual = PrefixSums::new(&w.as_grid().map(|v| v.powf(-1.0 / (p - 1.0))));
    let mut best = ApReport {
        p,
        characteristic: f64::NEG_INFINITY,
        rect: DyadicRectangle::UNIT,
    };
    for r in DyadicRectangle::all(depth) {
        let value = direct.average(r) * dual.average(r).powf(p - 1.0);
        if value > best.characteristic {
            best.characteristic = value;
            best.rect = r;
        }
    }
    Ok(best)
}

/// `w' = w^{-1/(p-1)}`.
pub fn conjugate_weight(w: &Weight, p: f64) -> Result<Weight> {
    check_exponent(p)?;
    Ok(w.powf(-1.0 / (p - 1.0)).with_role(w.role))
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `ν = μ^{1/p} λ^{-1/p}`.
pub fn bloom_weight(mu: &Weight, lambda: &Weight, p: f64) -> Result<Weight> {
    check_exponent(p)?;
    mu.as_grid().same_depth(lambda.as_grid())?;
    let values = mu
        .as_grid()
        .zip_map(lambda.as_grid(), |m, l| (m / l).powf(1.0 / p));
    Weight::new(values, WeightRole::Nu)
}

/// Characteristics entering the bound `1 ≤ [ν]_{A_2} ≤ [μ]_{A_p}^{1/p} [λ]_{A_p}^{1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BloomBound {
    pub a2_nu: f64,
    pub ap_mu: f64,
    pub ap_lambda: f64,
    pub upper: f64,
}

impl BloomBound {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.a2_nu >= 1.0 - rel_tol && self.a2_nu <= self.upper * (1.0 + rel_tol)
    }
}

pub fn bloom_bound(mu: &Weight, lambda: &Weight, p: f64) -> Result<BloomBound> {
    let nu = bloom_weight(mu, lambda, p)?;
    let a2_nu = ap_characteristic(&nu, 2.0)?.characteristic;
    let ap_mu = ap_characteristic(mu, p)?.characteristic;
    let ap_lambda = ap_characteristic(lambda, p)?.characteristic;
    Ok(BloomBound {
        a2_nu,
        ap_mu,
        ap_lambda,
        upper: (ap_mu * ap_lambda).powf(1.0 / p),
    })
}

/// The four comparable averages of an `A_p` weight on one rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub rect: DyadicRectangle,
    /// `⟨w^{1/p}⟩_R`
    pub root_mean: f64,
    /// `⟨w⟩_R^{1/p}`
    pub mean_root: f64,
    /// `⟨w^{-1/(p-1)}⟩_R^{-(p-1)/p}`
    pub dual_mean: f64,
    /// `⟨w^{-1/p}⟩_R^{-1}`
    pub harmonic_root: f64,
}

impl AverageRow {
    fn quantities(&self) -> [f64; 4] {
        [
            self.root_mean,
            self.mean_root,
            self.dual_mean,
            self.harmonic_root,
        ]
    }

    /// Largest pairwise ratio between the four quantities (always ≥ 1).
    pub fn max_ratio(&self) -> f64 {
        let q = self.quantities();
        let hi = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// `⟨w^{1/p}⟩ ≤ ⟨w⟩^{1/p}` and `⟨w^{-1/p}⟩^{-1} ≤ ⟨w^{1/p}⟩`.
    pub fn jensen_holds(&self, rel_tol: f64) -> bool {
        self.root_mean <= self.mean_root * (1.0 + rel_tol)
            && self.harmonic_root <= self.root_mean * (1.0 + rel_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub p: f64,
    pub rows: Vec<AverageRow>,
    pub max_ratio: f64,
    pub jensen_holds: bool,
}

pub fn average_comparability_report(w: &Weight, p: f64) -> Result<ComparabilityReport> {
    check_exponent(p)?;
    let g = w.as_grid();
    let root = PrefixSums::new(&g.map(|v| v.powf(1.0 / p)));
    let plain = PrefixSums::new(g);
    let dual = PrefixSums::new(&g.map(|v| v.powf(-1.0 / (p - 1.0))));
    let inv_root = PrefixSums::new(&g.map(|v| v.powf(-1.0 / p)));
    let rows: Vec<AverageRow> = DyadicRectangle::all(w.depth())
        .map(|rect| AverageRow {
            rect,
            root_mean: root.average(rect),
            mean_root: plain.average(rect).powf(1.0 / p),
            dual_mean: dual.average(rect).powf(-(p - 1.0) / p),
            harmonic_root: 1.0 / inv_root.average(rect),
        })
        .collect();
    let max_ratio = rows.iter().map(AverageRow::max_ratio).fold(1.0, f64::max);
    let jensen_holds = rows.iter().all(|r| r.jensen_holds(1e-12));
    Ok(ComparabilityReport {
        p,
        rows,
        max_ratio,
        jensen_holds,
    })
}

/// Output of [`random_ap_weight`].
#[derive(Debug, Clone)]
pub struct GeneratedWeight {
    pub weight: Weight,
    pub report: ApReport,
    /// Cells moved by the `[1e-8, 1e8]` clamp.
    pub clamped_cells: usize,
}

/// Multiplicative dyadic cascade.
///
/// Starting from `1` on `[0,1)²`, each rectangle that can still be refined is
/// split in half along a randomly chosen splittable axis; one half (chosen by
/// a fair coin) is multiplied by `1+ε` and the other by `1/(1+ε)` with
/// `ε ~ U[0, δ]`. Recursion is depth-first, lower half first, so the draw
/// sequence and the result are fixed by the seed.
pub fn random_ap_weight(depth: u32, p: f64, strength: f64, seed: u64) -> Result<GeneratedWeight> {
    check_depth(depth)?;
    check_exponent(p)?;
    if !(0.0..1.0).contains(&strength) {
        return Err(Error::InvalidParameter(format!(
            "cascade strength {strength} must lie in [0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = GridFunction2D::constant(depth, 1.0);
    cascade(&mut values, DyadicRectangle::UNIT, 1.0, strength, &mut rng);
    let mut clamped_cells = 0;
    for v in values.values_mut() {
        let c = v.clamp(WEIGHT_FLOOR, WEIGHT_CEIL);
        if c != *v {
            clamped_cells += 1;
            *v = c;
        }
    }
    let weight = Weight::new(values, WeightRole::Generic)?;
    let report = ap_characteristic(&weight, p)?;
    Ok(GeneratedWeight {
        weight,
        report,
        clamped_cells,
    })
}

fn cascade(
    out: &mut GridFunction2D,
    rect: DyadicRectangle,
    factor: f64,
    strength: f64,
    rng: &mut ChaCha8Rng,
) {
    let depth = out.depth();
    let split_x = rect.ix.level < depth;
    let split_y = rect.iy.level < depth;
    if !split_x && !split_y {
        for x in rect.ix.cells(depth) {
            for y in rect.iy.cells(depth) {
                out.set(x, y, factor);
            }
        }
        return;
    }
    let along_x = match (split_x, split_y) {
        (true, true) => rng.random_bool(0.5),
        (sx, _) => sx,
    };
    let eps = if strength > 0.0 {
        rng.random_range(0.0..=strength)
    } else {
        0.0
    };
    let up_first = rng.random_bool(0.5);
    let (f0, f1) = if up_first {
        (1.0 + eps, 1.0 / (1.0 + eps))
    } else {
        (1.0 / (1.0 + eps), 1.0 + eps)
    };
    let halves = if along_x {
        let [a, b] = rect.ix.children(depth).unwrap();
        [
            DyadicRectangle::new(a, rect.iy),
            DyadicRectangle::new(b, rect.iy),
        ]
    } else {
        let [a, b] = rect.iy.children(depth).unwrap();
        [
            DyadicRectangle::new(rect.ix, a),
            DyadicRectangle::new(rect.ix, b),
        ]
    };
    cascade(out, halves[0], factor * f0, strength, rng);
    cascade(out, halves[1], factor * f1, strength, rng);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_weight() -> Weight {
        Weight::new(
            GridFunction2D::from_fn(1, |x, _| if x == 0 { 2.0 } else { 1.0 }),
            WeightRole::Generic,
        )
        .unwrap()
    }

    #[test]
    fn uniform_weight_has_unit_characteristic() {
        for p in [1.5, 2.0, 3.0] {
            let r = ap_characteristic(&Weight::uniform(3), p).unwrap();
            assert_eq!(r.characteristic, 1.0);
        }
    }

    #[test]
    fn step_weight_characteristic_by_enumeration() {
        // The nine rectangles at depth one, worked by hand: x-halves and cells
        // are constant (value 1); the rest see both values: 1.5 * 0.75.
        let r = ap_characteristic(&step_weight(), 2.0).unwrap();
        assert!((r.characteristic - 1.125).abs() < 1e-15);
        assert_eq!(r.rect, DyadicRectangle::UNIT);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(
            json["rect"],
            serde_json::json!({"lx": 0, "ix": 0, "ly": 0, "iy": 0})
        );
        assert_eq!(json["p"], 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ap_characteristic(&Weight::uniform(2), 1.0).is_err());
        assert!(Weight::new(GridFunction2D::zeros(1), WeightRole::Mu).is_err());
        assert!(random_ap_weight(2, 2.0, 1.0, 0).is_err());
        let other = Weight::uniform(3);
        assert!(matches!(
            bloom_weight(&Weight::uniform(2), &other, 2.0),
            Err(Error::DepthMismatch(2, 3))
        ));
    }

    #[test]
    fn conjugation_is_an_involution() {
        let w = random_ap_weight(3, 3.0, 0.7, 11).unwrap().weight;
        let p = 3.0;
        let back =
            conjugate_weight(&conjugate_weight(&w, p).unwrap(), conjugate_exponent(p)).unwrap();
        assert!(back.as_grid().max_abs_diff(w.as_grid()) < 1e-12);
        let inv = conjugate_weight(&w, 2.0).unwrap();
        let expected = w.as_grid().map(|v| 1.0 / v);
        assert!(inv.as_grid().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn bloom_special_cases() {
        let mu = random_ap_weight(2, 2.0, 0.5, 3).unwrap().weight;
        let nu = bloom_weight(&mu, &mu, 2.5).unwrap();
        assert!(nu.as_grid().max_abs_diff(&GridFunction2D::constant(2, 1.0)) < 1e-15);
        let nu = bloom_weight(&mu, &Weight::uniform(2), 2.0).unwrap();
        assert!(nu.as_grid().max_abs_diff(&mu.as_grid().map(f64::sqrt)) < 1e-15);
    }

    #[test]
    fn comparability_of_constant_weight() {
        let w = Weight::new(GridFunction2D::constant(2, 5.0), WeightRole::Generic).unwrap();
        let rep = average_comparability_report(&w, 3.0).unwrap();
        let c = 5f64.powf(1.0 / 3.0);
        for row in &rep.rows {
            for q in row.quantities() {
                assert!((q - c).abs() < 1e-14);
            }
        }
        assert!((rep.max_ratio - 1.0).abs() < 1e-14);
        assert!(rep.jensen_holds);
    }

    #[test]
    fn generator_is_deterministic_and_trivial_at_zero_strength() {
        let a = random_ap_weight(3, 2.0, 0.5, 42).unwrap();
        let b = random_ap_weight(3, 2.0, 0.5, 42).unwrap();
        assert_eq!(a.weight, b.weight);
        let c = random_ap_weight(3, 2.0, 0.5, 43).unwrap();
        assert_ne!(a.weight, c.weight);
        let flat = random_ap_weight(4, 2.0, 0.0, 9).unwrap();
        assert_eq!(flat.report.characteristic, 1.0);
        assert!(flat.weight.values().iter().all(|&v| v == 1.0));
        assert_eq!(flat.clamped_cells, 0);
    }
}
