//! Operator norms `L^p(μ) → L^p(λ)` of materialized operators.
//!
//! With cell masses `μ_h = μ/4^N` and `λ_h = λ/4^N` the norm equals the
//! `ℓ^p → ℓ^p` norm of `D_{λ_h}^{1/p} M D_{μ_h}^{-1/p}`; at `p = 2` the cell
//! area cancels and this is a largest singular value.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::GridFunction2D;
use crate::error::{check_exponent, Error, Result};
use crate::operators::{IteratedCommutator, OperatorMatrix, SignChoice1D};
use crate::weights::Weight;

pub const MAX_POWER_ITERATIONS: usize = 500;
pub const POWER_TOL: f64 = 1e-9;

/// Largest depth for exhaustive sign enumeration (`2^3` choices per axis).
pub const EXHAUSTIVE_SIGN_MAX_DEPTH: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpNormResult {
    pub value: f64,
    pub kind: NormKind,
    pub iterations: usize,
    /// Riesz–Thorin bracket `‖B‖_1^{1/p} ‖B‖_∞^{1-1/p}`, reported for lower bounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_csv_path: Option<String>,
    #[serde(skip)]
    pub witness: Option<GridFunction2D>,
}

impl OpNormResult {
    fn zero(depth: u32, kind: NormKind) -> Self {
        Self {
            value: 0.0,
            kind,
            iterations: 0,
            upper_bound: None,
            witness_csv_path: None,
            witness: Some(GridFunction2D::constant(depth, 1.0)),
        }
    }
}

fn check_weights(t: &OperatorMatrix, mu: &Weight, lambda: &Weight) -> Result<()> {
    use crate::operators::LinearOperator;
    let d = t.depth();
    for w in [mu, lambda] {
        if w.depth() != d {
            return Err(Error::DepthMismatch(d, w.depth()));
        }
    }
    if let Some(k) = t.matrix().iter().position(|v| !v.is_finite()) {
        let n = 1usize << d;
        let row = k % t.size();
        return Err(Error::NonFinite {
            x: row / n,
            y: row % n,
        });
    }
    Ok(())
}

/// `‖T f‖_{L^p(λ)} / ‖f‖_{L^p(μ)}`.
pub fn operator_ratio(
    t: &OperatorMatrix,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    f: &GridFunction2D,
) -> Result<f64> {
    check_weights(t, mu, lambda)?;
    let tf = t.mul_vec(f.values());
    let num = weighted_pnorm(&tf, lambda.values(), p);
    let den = weighted_pnorm(f.values(), mu.values(), p);
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// `(Σ |v|^p w)^{1/p}` without the cell area, which cancels in every ratio.
fn weighted_pnorm(v: &[f64], w: &[f64], p: f64) -> f64 {
    v.iter()
        .zip(w)
        .map(|(a, b)| a.abs().powf(p) * b)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Largest singular value of `D_λ^{1/2} M D_μ^{-1/2}` with the maximizing input.
pub fn opnorm_p2_exact(t: &OperatorMatrix, mu: &Weight, lambda: &Weight) -> Result<OpNormResult> {
    use crate::operators::LinearOperator;
    check_weights(t, mu, lambda)?;
    let depth = t.depth();
    let sl: Vec<f64> = lambda.values().iter().map(|v| v.sqrt()).collect();
    let sm: Vec<f64> = mu.values().iter().map(|v| v.sqrt()).collect();
    let size = t.size();
    let b = DMatrix::from_fn(size, size, |i, j| sl[i] * t.matrix()[(i, j)] / sm[j]);
    if b.amax() == 0.0 {
        return Ok(OpNormResult::zero(depth, NormKind::Exact));
    }
    let svd = b.svd(false, true);
    let (k, &value) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, s)| {
                if *s > *acc.1 {
                    (i, s)
                } else {
                    acc
                }
            });
    let vt = svd.v_t.expect("right singular vectors requested");
    let witness: Vec<f64> = (0..size).map(|j| vt[(k, j)] / sm[j]).collect();
    Ok(OpNormResult {
        value,
        kind: NormKind::Exact,
        iterations: 0,
        upper_bound: None,
        witness_csv_path: None,
        witness: Some(GridFunction2D::new(depth, witness)?),
    })
}

/// `‖B‖_1^{1/p} ‖B‖_∞^{1-1/p}` for `B = D_{λ_h}^{1/p} M D_{μ_h}^{-1/p}`.
pub fn interpolation_upper_bound(
    t: &OperatorMatrix,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
) -> Result<f64> {
    check_exponent(p)?;
    check_weights(t, mu, lambda)?;
    let size = t.size();
    let area = 1.0 / size as f64;
    let dl: Vec<f64> = lambda
        .values()
        .iter()
        .map(|v| (v * area).powf(1.0 / p))
        .collect();
    let dm: Vec<f64> = mu
        .values()
        .iter()
        .map(|v| (v * area).powf(-1.0 / p))
        .collect();
    let m = t.matrix();
    let mut col_max: f64 = 0.0;
    let mut row_sums = vec![0.0; size];
    for j in 0..size {
        let mut col = 0.0;
        for i in 0..size {
            let v = (dl[i] * m[(i, j)] * dm[j]).abs();
            col += v;
            row_sums[i] += v;
        }
        col_max = col_max.max(col);
    }
    let row_max = row_sums.iter().cloned().fold(0.0, f64::max);
    Ok(col_max.powf(1.0 / p) * row_max.powf(1.0 - 1.0 / p))
}

#[derive(Debug, Clone, Default)]
pub struct LpSearch {
    pub restarts: usize,
    pub seed: u64,
    /// Extra starting points besides the random ones and the `p = 2` maximizer.
    pub warm_starts: Vec<GridFunction2D>,
}

struct Ascent<'a> {
    m: &'a OperatorMatrix,
    p: f64,
    /// `λ / 4^N`
    alpha: Vec<f64>,
    /// `μ / 4^N`
    beta: Vec<f64>,
}

impl Ascent<'_> {
    fn norm_mu(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.beta)
            .map(|(v, b)| v.abs().powf(self.p) * b)
            .sum::<f64>()
            .powf(1.0 / self.p)
    }

    fn norm_lambda(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.alpha)
            .map(|(v, a)| v.abs().powf(self.p) * a)
            .sum::<f64>()
            .powf(1.0 / self.p)
    }

    /// Returns `(best ratio, best input, iterations)`.
    fn run(&self, start: &[f64]) -> (f64, Vec<f64>, usize) {
        let p = self.p;
        let n0 = self.norm_mu(start);
        if n0 == 0.0 || !n0.is_finite() {
            return (0.0, start.to_vec(), 0);
        }
        let mut f: Vec<f64> = start.iter().map(|v| v / n0).collect();
        let mut ratio = self.norm_lambda(&self.m.mul_vec(&f));
        let mut best = (ratio, f.clone());
        let mut iterations = 0;
        while iterations < MAX_POWER_ITERATIONS {
            iterations += 1;
            let y = self.m.mul_vec(&f);
            let g: Vec<f64> = y
                .iter()
                .zip(&self.alpha)
                .map(|(v, a)| a * v.abs().powf(p - 1.0) * v.signum())
                .collect();
            let z = self.m.mul_transpose_vec(&g);
            let next: Vec<f64> = z
                .iter()
                .zip(&self.beta)
                .map(|(v, b)| v.signum() * (v.abs() / b).powf(1.0 / (p - 1.0)))
                .collect();
            let nn = self.norm_mu(&next);
            if nn == 0.0 || !nn.is_finite() {
                break;
            }
            f = next.into_iter().map(|v| v / nn).collect();
            let r = self.norm_lambda(&self.m.mul_vec(&f));
            if r > best.0 {
                best = (r, f.clone());
            }
            let done = (r - ratio).abs() <= POWER_TOL * r.abs().max(f64::MIN_POSITIVE);
            ratio = r;
            if done {
                break;
            }
        }
        (best.0, best.1, iterations)
    }
}

/// Certified lower bound for `‖T‖_{L^p(μ)→L^p(λ)}` by nonlinear power iteration.
pub fn opnorm_lp_lower(
    t: &OperatorMatrix,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    search: &LpSearch,
) -> Result<OpNormResult> {
    use crate::operators::LinearOperator;
    check_exponent(p)?;
    check_weights(t, mu, lambda)?;
    let depth = t.depth();
    let size = t.size();
    let area = 1.0 / size as f64;
    let ascent = Ascent {
        m: t,
        p,
        alpha: lambda.values().iter().map(|v| v * area).collect(),
        beta: mu.values().iter().map(|v| v * area).collect(),
    };
    let mut starts: Vec<Vec<f64>> =
        Vec::with_capacity(search.restarts + 2 + search.warm_starts.len());
    if let Some(w) = opnorm_p2_exact(t, mu, lambda)?.witness {
        starts.push(w.into_values());
    }
    for w in &search.warm_starts {
        if w.depth() != depth {
            return Err(Error::DepthMismatch(depth, w.depth()));
        }
        starts.push(w.values().to_vec());
    }
    starts.push(vec![1.0; size]);
    for i in 0..search.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        rng.set_stream(i as u64);
        starts.push((0..size).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    let runs: Vec<(f64, Vec<f64>, usize)> = starts.par_iter().map(|s| ascent.run(s)).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new(), 0);
    for run in runs {
        if run.0 > best.0 {
            best = run;
        }
    }
    let upper = interpolation_upper_bound(t, mu, lambda, p)?;
    if best.0 <= 0.0 {
        let mut r = OpNormResult::zero(depth, NormKind::LowerBound);
        r.upper_bound = Some(upper);
        return Ok(r);
    }
    Ok(OpNormResult {
        value: best.0,
        kind: NormKind::LowerBound,
        iterations: best.2,
        upper_bound: Some(upper),
        witness_csv_path: None,
        witness: Some(GridFunction2D::new(depth, best.1)?),
    })
}

/// `p = 2`: exact; otherwise a lower bound with the given search.
pub fn opnorm(
    t: &OperatorMatrix,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    search: &LpSearch,
) -> Result<OpNormResult> {
    if p == 2.0 {
        opnorm_p2_exact(t, mu, lambda)
    } else {
        opnorm_lp_lower(t, mu, lambda, p, search)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SupCommutatorResult {
    pub value: f64,
    pub kind: NormKind,
    pub sigma1: SignChoice1D,
    pub sigma2: SignChoice1D,
    /// Running maximum after each evaluated sign pair.
    pub running_max: Vec<f64>,
    #[serde(skip)]
    pub best: OpNormResult,
}

/// Norm of `[T_{σ1}^1, [T_{σ2}^2, b]]` for one sign pair.
pub fn commutator_norm(
    b: &GridFunction2D,
    sigma1: &SignChoice1D,
    sigma2: &SignChoice1D,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    search: &LpSearch,
) -> Result<OpNormResult> {
    let op = IteratedCommutator::new(b, sigma1.clone(), sigma2.clone())?;
    let m = OperatorMatrix::materialize(&op)?;
    opnorm(&m, mu, lambda, p, search)
}

/// `sup_{σ1,σ2 ∈ {±1}} ‖[T_{σ1}^1, [T_{σ2}^2, b]]‖_{L^p(μ)→L^p(λ)}`.
///
/// Sampled pair `k` is drawn from its own stream, so a longer run extends a
/// shorter one and the running maximum never decreases.
pub fn sup_commutator_norm(
    b: &GridFunction2D,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    mode: SignMode,
    search: &LpSearch,
) -> Result<SupCommutatorResult> {
    check_exponent(p)?;
    b.same_depth(mu.as_grid())?;
    b.same_depth(lambda.as_grid())?;
    let depth = b.depth();
    let pairs: Vec<(SignChoice1D, SignChoice1D)> = match mode {
        SignMode::Exhaustive => {
            if depth > EXHAUSTIVE_SIGN_MAX_DEPTH {
                return Err(Error::DepthTooLarge {
                    depth,
                    max: EXHAUSTIVE_SIGN_MAX_DEPTH,
                    what: "exhaustive sign enumeration",
                });
            }
            let count = 1u64 << ((1u32 << depth) - 1);
            let mut out = Vec::with_capacity((count * count) as usize);
            for a in 0..count {
                for c in 0..count {
                    out.push((
                        SignChoice1D::from_bits(depth, a)?,
                        SignChoice1D::from_bits(depth, c)?,
                    ));
                }
            }
            out
        }
        SignMode::Sampled { samples, seed } => (0..samples)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                Ok((
                    SignChoice1D::random(depth, &mut rng, false)?,
                    SignChoice1D::random(depth, &mut rng, false)?,
                ))
            })
            .collect::<Result<_>>()?,
    };
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no sign pairs to evaluate".into()));
    }
    let norms: Vec<OpNormResult> = pairs
        .par_iter()
        .map(|(s1, s2)| commutator_norm(b, s1, s2, mu, lambda, p, search))
        .collect::<Result<_>>()?;
    let mut running_max = Vec::with_capacity(norms.len());
    let mut best = 0;
    for (k, r) in norms.iter().enumerate() {
        if r.value > norms[best].value {
            best = k;
        }
        running_max.push(norms[best].value);
    }
    let (sigma1, sigma2) = pairs[best].clone();
    let best = norms.into_iter().nth(best).expect("non-empty");
    Ok(SupCommutatorResult {
        value: best.value,
        kind: best.kind,
        sigma1,
        sigma2,
        running_max,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicRectangle, HaarFunctionSpec};
    use crate::operators::{Identity, Lambda, RectProjection};
    use crate::weights::random_ap_weight;

    fn symbol(depth: u32) -> GridFunction2D {
        GridFunction2D::from_fn(depth, |x, y| ((x * 5 + y * 7 + x * y) % 9) as f64 - 4.0)
    }

    #[test]
    fn identity_has_norm_one_for_equal_weights() {
        let w = random_ap_weight(2, 2.0, 0.8, 3).unwrap().weight;
        let id = OperatorMatrix::materialize(&Identity { depth: 2 }).unwrap();
        let r = opnorm_p2_exact(&id, &w, &w).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let u = Weight::uniform(2);
        for p in [1.5, 3.0] {
            let r = opnorm_lp_lower(
                &id,
                &u,
                &u,
                p,
                &LpSearch {
                    restarts: 3,
                    seed: 1,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
            assert!(r.value <= r.upper_bound.unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn orthogonal_projection_has_norm_one() {
        let r0 = DyadicRectangle::from_parts(1, 0, 0, 0).unwrap();
        let m = OperatorMatrix::materialize(&RectProjection::new(2, r0).unwrap()).unwrap();
        let u = Weight::uniform(2);
        let r = opnorm_p2_exact(&m, &u, &u).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let w = r.witness.unwrap();
        let h = HaarFunctionSpec::cancellative(r0).to_grid(2);
        let cos = w.inner(&h).abs() / (w.l2_norm() * h.l2_norm());
        assert!((cos - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_operator() {
        let z =
            OperatorMatrix::materialize(&Lambda::new(&GridFunction2D::constant(2, 1.0))).unwrap();
        let u = Weight::uniform(2);
        assert_eq!(opnorm_p2_exact(&z, &u, &u).unwrap().value, 0.0);
        assert_eq!(
            opnorm_lp_lower(&z, &u, &u, 3.0, &LpSearch::default())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn lower_bound_matches_exact_at_p2_and_witness_reproduces() {
        let depth = 2;
        let m = OperatorMatrix::materialize(&Lambda::new(&symbol(depth))).unwrap();
        let mu = random_ap_weight(depth, 2.0, 0.5, 10).unwrap().weight;
        let la = random_ap_weight(depth, 2.0, 0.5, 11).unwrap().weight;
        let exact = opnorm_p2_exact(&m, &mu, &la).unwrap();
        let lower = opnorm_lp_lower(
            &m,
            &mu,
            &la,
            2.0,
            &LpSearch {
                restarts: 4,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((lower.value - exact.value).abs() < 1e-6 * exact.value);
        for r in [&exact, &lower] {
            let ratio = operator_ratio(&m, &mu, &la, 2.0, r.witness.as_ref().unwrap()).unwrap();
            assert!((ratio - r.value).abs() < 1e-10 * r.value);
        }
        let p = 3.0;
        let lp = opnorm_lp_lower(
            &m,
            &mu,
            &la,
            p,
            &LpSearch {
                restarts: 4,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let ratio = operator_ratio(&m, &mu, &la, p, lp.witness.as_ref().unwrap()).unwrap();
        assert!((ratio - lp.value).abs() < 1e-10 * lp.value);
        assert!(lp.value <= lp.upper_bound.unwrap());
        let json = serde_json::to_value(&lp).unwrap();
        assert_eq!(json["kind"], "lower_bound");
    }

    #[test]
    fn sup_commutator_basics() {
        let depth = 2;
        let u = Weight::uniform(depth);
        let c = sup_commutator_norm(
            &GridFunction2D::constant(depth, 2.0),
            &u,
            &u,
            2.0,
            SignMode::Exhaustive,
            &LpSearch::default(),
        )
        .unwrap();
        assert!(c.value < 1e-12);
        assert_eq!(c.running_max.len(), 64);
        let b = symbol(depth);
        let short = sup_commutator_norm(
            &b,
            &u,
            &u,
            2.0,
            SignMode::Sampled {
                samples: 5,
                seed: 9,
            },
            &LpSearch::default(),
        )
        .unwrap();
        let long = sup_commutator_norm(
            &b,
            &u,
            &u,
            2.0,
            SignMode::Sampled {
                samples: 12,
                seed: 9,
            },
            &LpSearch::default(),
        )
        .unwrap();
        assert_eq!(short.running_max[..], long.running_max[..5]);
        assert!(long.running_max.windows(2).all(|w| w[0] <= w[1]));
        let full = sup_commutator_norm(&b, &u, &u, 2.0, SignMode::Exhaustive, &LpSearch::default())
            .unwrap();
        assert!(full.value >= long.value);
        assert!(sup_commutator_norm(
            &GridFunction2D::zeros(3),
            &Weight::uniform(3),
            &Weight::uniform(3),
            2.0,
            SignMode::Exhaustive,
            &LpSearch::default()
        )
        .is_err());
    }
}
