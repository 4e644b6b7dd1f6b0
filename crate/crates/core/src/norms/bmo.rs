use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{square_function, strong_maximal};
use crate::dyadic::{
    haar_forward, haar_inverse, DyadicRectangle, GridFunction2D, PrefixSums, Shadow,
};
use crate::error::{check_exponent, Error, Result};
use crate::weights::Weight;

/// Largest depth for the exhaustive mask search (`2^16 - 1` masks).
pub const EXACT_BMO_MAX_DEPTH: u32 = 2;

/// Relative improvement a local move must exceed to be accepted.
const MOVE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BmoStrategy {
    Exact,
    Heuristic { restarts: usize, seed: u64 },
}

impl BmoStrategy {
    pub fn kind(self) -> StrategyKind {
        match self {
            BmoStrategy::Exact => StrategyKind::Exact,
            BmoStrategy::Heuristic { .. } => StrategyKind::Heuristic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BmoWitness {
    Mask(Shadow),
    Rect(DyadicRectangle),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoResult {
    pub value: f64,
    pub strategy: StrategyKind,
    pub witness: BmoWitness,
}

/// `Ω ↦ ‖S_{D(Ω)} b‖_{L^p(λ)} / μ(Ω)^{1/p}` with precomputed pieces.
struct Objective {
    p: f64,
    n: usize,
    /// `(R, cells of R as a mask, b_R²/|R|)` for every nonzero coefficient.
    terms: Vec<(DyadicRectangle, Shadow, f64)>,
    lam: Vec<f64>,
    mu: Vec<f64>,
}

impl Objective {
    fn new(b: &GridFunction2D, mu: &Weight, lambda: &Weight, p: f64) -> Result<Self> {
        check_exponent(p)?;
        b.same_depth(mu.as_grid())?;
        b.same_depth(lambda.as_grid())?;
        let depth = b.depth();
        let area = b.cell_area();
        let terms = haar_forward(b)
            .iter_c00()
            .filter(|&(_, c)| c != 0.0)
            .map(|(r, c)| (r, Shadow::from_rect(depth, r), c * c / r.area()))
            .collect();
        Ok(Self {
            p,
            n: b.side(),
            terms,
            lam: lambda.values().iter().map(|v| v * area).collect(),
            mu: mu.values().iter().map(|v| v * area).collect(),
        })
    }

    fn depth(&self) -> u32 {
        self.n.trailing_zeros()
    }

    fn eval(&self, mask: &Shadow, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.resize(self.n * self.n, 0.0);
        let depth = self.depth();
        for (r, cells, t) in &self.terms {
            if mask.covers(cells) {
                let ys = r.iy.cells(depth);
                for x in r.ix.cells(depth) {
                    for v in &mut buf[x * self.n + ys.start..x * self.n + ys.end] {
                        *v += t;
                    }
                }
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for k in mask.cells() {
            den += self.mu[k];
            if buf[k] > 0.0 {
                num += buf[k].powf(self.p / 2.0) * self.lam[k];
            }
        }
        if den == 0.0 {
            return 0.0;
        }
        (num / den).powf(1.0 / self.p)
    }

    fn exhaustive(&self) -> (f64, Shadow) {
        let depth = self.depth();
        let total = 1u64 << (self.n * self.n);
        let (value, bits) = (1..total)
            .into_par_iter()
            .map_init(Vec::new, |buf, bits| {
                (self.eval(&Shadow::from_bits(depth, bits), buf), bits)
            })
            .reduce(|| (f64::NEG_INFINITY, u64::MAX), first_max);
        (value, Shadow::from_bits(depth, bits))
    }

    /// Single-cell moves until no move improves by more than `MOVE_TOL` relative.
    fn climb(&self, mut mask: Shadow, mut value: f64, buf: &mut Vec<f64>) -> (f64, Shadow) {
        let cells = self.n * self.n;
        loop {
            let mut best: Option<(f64, usize)> = None;
            for k in 0..cells {
                let present = mask.contains_index(k);
                if present && mask.len() == 1 {
                    continue;
                }
                mask.toggle_index(k);
                let v = self.eval(&mask, buf);
                mask.toggle_index(k);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, k));
                }
            }
            match best {
                Some((v, k)) if v > value * (1.0 + MOVE_TOL) && v > value => {
                    mask.toggle_index(k);
                    value = v;
                }
                _ => return (value, mask),
            }
        }
    }

    fn heuristic(&self, b: &GridFunction2D, restarts: usize, seed: u64) -> (f64, Shadow) {
        let depth = self.depth();
        let mut buf = Vec::new();
        let mut best = (f64::NEG_INFINITY, Shadow::full(depth));
        let consider = |v: f64, m: Shadow, best: &mut (f64, Shadow)| {
            if v > best.0 {
                *best = (v, m);
            }
        };
        for r in DyadicRectangle::all(depth) {
            let m = Shadow::from_rect(depth, r);
            let v = self.eval(&m, &mut buf);
            consider(v, m, &mut best);
        }
        let bic = haar_inverse(&haar_forward(b).bicancellative_part());
        let seeds = [
            square_function(b, None).expect("depth checked"),
            strong_maximal(&bic),
        ];
        for field in &seeds {
            let mut levels: Vec<f64> = field
                .values()
                .iter()
                .copied()
                .filter(|&v| v > 0.0)
                .collect();
            levels.sort_by(|a, c| c.total_cmp(a));
            levels.dedup();
            for t in levels {
                let m = Shadow::from_fn(depth, |x, y| field.get(x, y) >= t);
                let v = self.eval(&m, &mut buf);
                consider(v, m, &mut best);
            }
        }
        let (v, m) = self.climb(best.1.clone(), best.0, &mut buf);
        consider(v, m, &mut best);

        let cells = self.n * self.n;
        let restarted: Vec<(f64, Shadow)> = (0..restarts)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let mut m = Shadow::empty(depth);
                for k in 0..cells {
                    if rng.random_bool(0.5) {
                        m.insert_index(k);
                    }
                }
                if m.is_empty() {
                    m.insert_index(rng.random_range(0..cells));
                }
                let v = self.eval(&m, buf);
                self.climb(m, v, buf)
            })
            .collect();
        for (v, m) in restarted {
            consider(v, m, &mut best);
        }
        best
    }
}

fn first_max(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// `‖b‖_{BMO_prod(μ,λ,p)}` as a supremum over cell masks `Ω` of
/// `‖S_{D(Ω)} b‖_{L^p(λ)} / μ(Ω)^{1/p}`.
pub fn bmo_prod_two_weight(
    b: &GridFunction2D,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    strategy: BmoStrategy,
) -> Result<BmoResult> {
    let obj = Objective::new(b, mu, lambda, p)?;
    let (value, mask) = match strategy {
        BmoStrategy::Exact => {
            if b.depth() > EXACT_BMO_MAX_DEPTH {
                return Err(Error::DepthTooLarge {
                    depth: b.depth(),
                    max: EXACT_BMO_MAX_DEPTH,
                    what: "exhaustive shadow enumeration",
                });
            }
            obj.exhaustive()
        }
        BmoStrategy::Heuristic { restarts, seed } => obj.heuristic(b, restarts, seed),
    };
    Ok(BmoResult {
        value,
        strategy: strategy.kind(),
        witness: BmoWitness::Mask(mask),
    })
}

/// `‖b‖_{BMO_prod(ν)} = ‖b‖_{BMO_prod(ν, ν^{-1}, 2)}`.
pub fn bmo_prod_one_weight(
    b: &GridFunction2D,
    nu: &Weight,
    strategy: BmoStrategy,
) -> Result<BmoResult> {
    bmo_prod_two_weight(b, nu, &nu.powf(-1.0), 2.0, strategy)
}

/// The product BMO ratio at one mask.
pub fn bmo_objective(
    b: &GridFunction2D,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    mask: &Shadow,
) -> Result<f64> {
    if mask.depth() != b.depth() {
        return Err(Error::DepthMismatch(b.depth(), mask.depth()));
    }
    let obj = Objective::new(b, mu, lambda, p)?;
    Ok(obj.eval(mask, &mut Vec::new()))
}

/// `‖(b - ⟨b⟩_R) 1_R‖_{L^p(λ)} / μ(R)^{1/p}`.
pub fn little_bmo_ratio(
    b: &GridFunction2D,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    rect: DyadicRectangle,
) -> Result<f64> {
    check_exponent(p)?;
    b.same_depth(mu.as_grid())?;
    b.same_depth(lambda.as_grid())?;
    let avg = b.average(rect);
    Ok(oscillation(b, lambda, p, rect, avg) / mu.measure_rect(rect).powf(1.0 / p))
}

fn oscillation(
    b: &GridFunction2D,
    lambda: &Weight,
    p: f64,
    rect: DyadicRectangle,
    avg: f64,
) -> f64 {
    let depth = b.depth();
    let lam = lambda.as_grid();
    let mut s = 0.0;
    for x in rect.ix.cells(depth) {
        for y in rect.iy.cells(depth) {
            s += (b.get(x, y) - avg).abs().powf(p) * lam.get(x, y);
        }
    }
    (s * b.cell_area()).powf(1.0 / p)
}

/// `‖b‖_{bmo(μ,λ,p)}`: maximum of [`little_bmo_ratio`] over every dyadic rectangle.
pub fn little_bmo(b: &GridFunction2D, mu: &Weight, lambda: &Weight, p: f64) -> Result<BmoResult> {
    check_exponent(p)?;
    b.same_depth(mu.as_grid())?;
    b.same_depth(lambda.as_grid())?;
    let bs = PrefixSums::new(b);
    let ms = PrefixSums::new(mu.as_grid());
    let mut best = (f64::NEG_INFINITY, DyadicRectangle::UNIT);
    for r in DyadicRectangle::all(b.depth()) {
        let v =
            oscillation(b, lambda, p, r, bs.average(r)) / (ms.average(r) * r.area()).powf(1.0 / p);
        if v > best.0 {
            best = (v, r);
        }
    }
    Ok(BmoResult {
        value: best.0,
        strategy: StrategyKind::Exact,
        witness: BmoWitness::Rect(best.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicInterval, HaarFunctionSpec};
    use crate::weights::random_ap_weight;

    fn unit(depth: u32) -> Weight {
        Weight::uniform(depth)
    }

    #[test]
    fn top_haar_symbol_has_unit_norm() {
        let depth = 2;
        let h = HaarFunctionSpec::cancellative(DyadicRectangle::UNIT).to_grid(depth);
        let r =
            bmo_prod_two_weight(&h, &unit(depth), &unit(depth), 2.0, BmoStrategy::Exact).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.witness, BmoWitness::Mask(Shadow::full(depth)));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["strategy"], "exact");
        assert_eq!(json["witness"]["mask"], "ffff");
        let one = bmo_prod_one_weight(
            &h,
            &unit(depth),
            BmoStrategy::Heuristic {
                restarts: 2,
                seed: 0,
            },
        )
        .unwrap();
        assert!((one.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_symbol_has_zero_norms() {
        let depth = 2;
        let b = GridFunction2D::constant(depth, 3.0);
        let w = random_ap_weight(depth, 2.0, 0.5, 1).unwrap().weight;
        assert_eq!(
            bmo_prod_two_weight(&b, &w, &w, 3.0, BmoStrategy::Exact)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            bmo_prod_one_weight(&b, &w, BmoStrategy::Exact)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(little_bmo(&b, &w, &w, 2.0).unwrap().value, 0.0);
    }

    #[test]
    fn exact_is_rejected_above_depth_two() {
        let b = GridFunction2D::zeros(3);
        assert!(matches!(
            bmo_prod_two_weight(&b, &unit(3), &unit(3), 2.0, BmoStrategy::Exact),
            Err(Error::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn homogeneity() {
        let depth = 2;
        let b = GridFunction2D::from_fn(depth, |x, y| ((x * 3 + y * 5) % 7) as f64 - 2.0);
        let nu = random_ap_weight(depth, 2.0, 0.5, 4).unwrap().weight;
        let a = bmo_prod_one_weight(&b, &nu, BmoStrategy::Exact)
            .unwrap()
            .value;
        let c = bmo_prod_one_weight(&b.scale(-2.5), &nu, BmoStrategy::Exact)
            .unwrap()
            .value;
        assert!((c - 2.5 * a).abs() < 1e-12 * c);
    }

    #[test]
    fn little_bmo_of_x_haar_function() {
        let depth = 3;
        let b = GridFunction2D::from_fn(depth, |x, _| haar_1d_sign(x, depth));
        let r = little_bmo(&b, &unit(depth), &unit(depth), 2.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.witness, BmoWitness::Rect(DyadicRectangle::UNIT));
        let v =
            little_bmo_ratio(&b, &unit(depth), &unit(depth), 2.0, DyadicRectangle::UNIT).unwrap();
        assert_eq!(v, r.value);
    }

    fn haar_1d_sign(x: usize, depth: u32) -> f64 {
        crate::dyadic::haar::haar_1d_value(DyadicInterval::ROOT, false, depth, x)
    }

    #[test]
    fn heuristic_never_exceeds_exact() {
        let depth = 2;
        for seed in 0..5 {
            let b =
                GridFunction2D::from_fn(depth, |x, y| ((x * 7 + y * 3 + seed * x * y) % 11) as f64);
            let mu = random_ap_weight(depth, 2.0, 0.7, seed as u64)
                .unwrap()
                .weight;
            let la = random_ap_weight(depth, 2.0, 0.7, 100 + seed as u64)
                .unwrap()
                .weight;
            let ex = bmo_prod_two_weight(&b, &mu, &la, 2.0, BmoStrategy::Exact).unwrap();
            let he = bmo_prod_two_weight(
                &b,
                &mu,
                &la,
                2.0,
                BmoStrategy::Heuristic {
                    restarts: 4,
                    seed: 1,
                },
            )
            .unwrap();
            assert!(he.value <= ex.value + 1e-12);
            let BmoWitness::Mask(m) = &he.witness else {
                panic!()
            };
            assert_eq!(bmo_objective(&b, &mu, &la, 2.0, m).unwrap(), he.value);
        }
    }
}
