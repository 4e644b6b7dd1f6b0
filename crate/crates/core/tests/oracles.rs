//! Library results against brute-force references built only from cell values.

use haar_bloom::dyadic::{
    haar_forward, partial_sum_pr, DyadicInterval, DyadicRectangle, GridFunction2D, Shadow,
};
use haar_bloom::norms::{bmo_objective, bmo_prod_two_weight, little_bmo, BmoStrategy};
use haar_bloom::operators::{
    paraproduct_apply, theta_apply, Axis, Commutator, IteratedCommutator, LinearOperator,
    Multiplication, OperatorMatrix, SignChoice1D, SliceProjection,
};
use haar_bloom::opnorm::{opnorm_p2_exact, sup_commutator_norm, LpSearch, SignMode};
use haar_bloom::weights::{ap_characteristic, random_ap_weight, Weight};
use haar_bloom::HaarType;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- oracles ----

/// `h_I` (right half positive, L²-normalized) or `1_I/|I|` on cell `c`.
fn h1(i: DyadicInterval, depth: u32, c: usize, noncancellative: bool) -> f64 {
    let width = 1usize << (depth - i.level);
    let start = i.index as usize * width;
    if c < start || c >= start + width {
        return 0.0;
    }
    let len = 1.0 / (1u64 << i.level) as f64;
    if noncancellative {
        1.0 / len
    } else if c - start >= width / 2 {
        1.0 / len.sqrt()
    } else {
        -1.0 / len.sqrt()
    }
}

fn tabulate(depth: u32, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let n = 1usize << depth;
    (0..n * n).map(|k| f(k / n, k % n)).collect()
}

/// `h_R^{(ε1ε2)}` as a cell table; `true` means non-cancellative on that axis.
fn haar_table(r: DyadicRectangle, depth: u32, e1: bool, e2: bool) -> Vec<f64> {
    tabulate(depth, |x, y| {
        h1(r.ix, depth, x, e1) * h1(r.iy, depth, y, e2)
    })
}

fn integral(a: &[f64], b: &[f64], depth: u32) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / (1u64 << (2 * depth)) as f64
}

fn rect_cells(r: DyadicRectangle, depth: u32) -> Vec<usize> {
    let n = 1usize << depth;
    (0..n * n)
        .filter(|k| {
            let (x, y) = (k / n, k % n);
            h1(r.ix, depth, x, true) != 0.0 && h1(r.iy, depth, y, true) != 0.0
        })
        .collect()
}

fn average(v: &[f64], r: DyadicRectangle, depth: u32) -> f64 {
    let cells = rect_cells(r, depth);
    cells.iter().map(|&k| v[k]).sum::<f64>() / cells.len() as f64
}

fn cancellative_rects(depth: u32) -> Vec<DyadicRectangle> {
    let mut out = Vec::new();
    for lx in 0..depth {
        for ix in 0..1u32 << lx {
            for ly in 0..depth {
                for iy in 0..1u32 << ly {
                    out.push(DyadicRectangle::from_parts(lx, ix, ly, iy).unwrap());
                }
            }
        }
    }
    out
}

fn all_rects(depth: u32) -> Vec<DyadicRectangle> {
    let mut out = Vec::new();
    for lx in 0..=depth {
        for ix in 0..1u32 << lx {
            for ly in 0..=depth {
                for iy in 0..1u32 << ly {
                    out.push(DyadicRectangle::from_parts(lx, ix, ly, iy).unwrap());
                }
            }
        }
    }
    out
}

fn coeff(f: &[f64], r: DyadicRectangle, depth: u32) -> f64 {
    integral(f, &haar_table(r, depth, false, false), depth)
}

/// `Σ_R b_R c_R(f) g_R` with the pairing and output families chosen by the paraproduct type.
fn paraproduct_oracle(kind: HaarType, b: &[f64], f: &[f64], depth: u32) -> Vec<f64> {
    let mut out = vec![0.0; b.len()];
    for r in cancellative_rects(depth) {
        let br = coeff(b, r, depth);
        let (pair, emit) = match kind {
            HaarType::T11 => ((true, true), (false, false)),
            HaarType::T00 => ((false, false), (true, true)),
            HaarType::T10 => ((true, false), (false, true)),
            HaarType::T01 => ((false, true), (true, false)),
        };
        let fr = integral(f, &haar_table(r, depth, pair.0, pair.1), depth);
        for (o, h) in out.iter_mut().zip(haar_table(r, depth, emit.0, emit.1)) {
            *o += br * fr * h;
        }
    }
    out
}

fn theta_oracle(b: &[f64], f: &[f64], depth: u32) -> Vec<f64> {
    let mut out = vec![0.0; b.len()];
    for r in cancellative_rects(depth) {
        let fr = coeff(f, r, depth);
        let avg = average(b, r, depth);
        let h = haar_table(r, depth, false, false);
        for k in rect_cells(r, depth) {
            out[k] += (b[k] - avg) * fr * h[k];
        }
    }
    out
}

/// `sup_Ω ‖S_{D(Ω)} b‖_{L^p(λ)} / μ(Ω)^{1/p}` over every non-empty mask.
fn bmo_oracle(b: &[f64], mu: &[f64], lambda: &[f64], p: f64, depth: u32) -> f64 {
    let cells = b.len();
    let area = 1.0 / cells as f64;
    let terms: Vec<(u64, f64, Vec<usize>)> = cancellative_rects(depth)
        .into_iter()
        .map(|r| {
            let cs = rect_cells(r, depth);
            let bits = cs.iter().fold(0u64, |m, &k| m | 1 << k);
            (bits, coeff(b, r, depth).powi(2) / r.area(), cs)
        })
        .collect();
    let mut best = 0.0f64;
    for mask in 1u64..1 << cells {
        let mut s2 = vec![0.0; cells];
        for (bits, w, cs) in &terms {
            if bits & !mask == 0 {
                for &k in cs {
                    s2[k] += w;
                }
            }
        }
        let num: f64 = s2
            .iter()
            .zip(lambda)
            .map(|(s, l)| s.sqrt().powf(p) * l)
            .sum::<f64>()
            * area;
        let den: f64 = (0..cells)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| mu[k])
            .sum::<f64>()
            * area;
        best = best.max((num / den).powf(1.0 / p));
    }
    best
}

fn ap_oracle(w: &[f64], p: f64, depth: u32) -> f64 {
    let dual: Vec<f64> = w.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    all_rects(depth)
        .into_iter()
        .map(|r| average(w, r, depth) * average(&dual, r, depth).powf(p - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn little_bmo_oracle(b: &[f64], mu: &[f64], lambda: &[f64], p: f64, depth: u32) -> f64 {
    let area = 1.0 / b.len() as f64;
    all_rects(depth)
        .into_iter()
        .map(|r| {
            let avg = average(b, r, depth);
            let cs = rect_cells(r, depth);
            let num: f64 = cs
                .iter()
                .map(|&k| (b[k] - avg).abs().powf(p) * lambda[k])
                .sum::<f64>()
                * area;
            let den: f64 = cs.iter().map(|&k| mu[k]).sum::<f64>() * area;
            (num / den).powf(1.0 / p)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `‖T‖_{L²(μ)→L²(λ)}` as the root of the top eigenvalue of `BᵀB`, `B = D_λ^{1/2} M D_μ^{-1/2}`.
fn p2_norm_oracle(m: &DMatrix<f64>, mu: &[f64], lambda: &[f64]) -> f64 {
    let b = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] * lambda[i].sqrt() / mu[j].sqrt()
    });
    let g = b.transpose() * &b;
    g.symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

// ---- helpers ----

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_values(depth: u32, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..1usize << (2 * depth))
        .map(|_| r.random_range(-1.0..1.0))
        .collect()
}

fn grid(depth: u32, v: &[f64]) -> GridFunction2D {
    GridFunction2D::new(depth, v.to_vec()).unwrap()
}

fn weight(depth: u32, p: f64, delta: f64, seed: u64) -> Weight {
    random_ap_weight(depth, p, delta, seed).unwrap().weight
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

// ---- tests ----

#[test]
fn haar_coefficients_match_explicit_inner_products() {
    for depth in 1..=3 {
        let v = random_values(depth, &mut rng(depth as u64));
        let c = haar_forward(&grid(depth, &v));
        for r in cancellative_rects(depth) {
            assert!((c.c00(r) - coeff(&v, r, depth)).abs() < 1e-13);
        }
        let total: f64 = v.iter().sum::<f64>() / v.len() as f64;
        assert!((c.c11() - total).abs() < 1e-13);
    }
}

#[test]
fn partial_sums_match_explicit_expansion() {
    let depth = 3;
    let v = random_values(depth, &mut rng(10));
    let b = grid(depth, &v);
    for r in cancellative_rects(depth) {
        let mut expected = vec![0.0; v.len()];
        for s in cancellative_rects(depth)
            .into_iter()
            .filter(|s| r.contains(*s))
        {
            let bs = coeff(&v, s, depth);
            for (e, h) in expected.iter_mut().zip(haar_table(s, depth, false, false)) {
                *e += bs * h;
            }
        }
        assert!(max_diff(partial_sum_pr(&b, r).unwrap().values(), &expected) < 1e-12);
    }
}

#[test]
fn paraproducts_match_definitions() {
    for depth in 1..=3 {
        let mut r = rng(20 + depth as u64);
        let b = random_values(depth, &mut r);
        let f = random_values(depth, &mut r);
        for kind in HaarType::ALL {
            let got = paraproduct_apply(kind, &grid(depth, &b), &grid(depth, &f)).unwrap();
            let want = paraproduct_oracle(kind, &b, &f, depth);
            assert!(
                max_diff(got.values(), &want) < 1e-12,
                "{kind:?} at depth {depth}"
            );
        }
        let got = theta_apply(&grid(depth, &b), &grid(depth, &f)).unwrap();
        assert!(max_diff(got.values(), &theta_oracle(&b, &f, depth)) < 1e-12);
    }
}

#[test]
fn exact_bmo_matches_mask_enumeration() {
    let depth = 2;
    for (t, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
        let mut r = rng(30 + t as u64);
        let b = random_values(depth, &mut r);
        let mu = weight(depth, p, 0.5, r.random());
        let lambda = weight(depth, p, 0.5, r.random());
        let want = bmo_oracle(&b, mu.values(), lambda.values(), p, depth);
        let got =
            bmo_prod_two_weight(&grid(depth, &b), &mu, &lambda, p, BmoStrategy::Exact).unwrap();
        assert!(
            (got.value - want).abs() <= 1e-12 * want,
            "p={p}: {} vs {want}",
            got.value
        );
        if let haar_bloom::norms::BmoWitness::Mask(m) = &got.witness {
            let at = bmo_objective(&grid(depth, &b), &mu, &lambda, p, m).unwrap();
            assert!((at - got.value).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn bmo_objective_on_single_masks() {
    let depth = 2;
    let mut r = rng(35);
    let b = random_values(depth, &mut r);
    let unit = Weight::uniform(depth);
    let full = bmo_objective(&grid(depth, &b), &unit, &unit, 2.0, &Shadow::full(depth)).unwrap();
    let energy: f64 = cancellative_rects(depth)
        .iter()
        .map(|&q| coeff(&b, q, depth).powi(2))
        .sum();
    assert!((full * full - energy).abs() < 1e-12);
    // one cell contains no rectangle with a cancellative Haar function
    let cell = Shadow::from_bits(depth, 1);
    assert_eq!(
        bmo_objective(&grid(depth, &b), &unit, &unit, 2.0, &cell).unwrap(),
        0.0
    );
}

#[test]
fn ap_characteristic_and_little_bmo_match_enumeration() {
    for depth in 1..=3 {
        for (t, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
            let seed = 40 + 3 * depth as u64 + t as u64;
            let mu = weight(depth, p, 0.7, seed);
            let lambda = weight(depth, p, 0.7, seed + 100);
            let want = ap_oracle(mu.values(), p, depth);
            let got = ap_characteristic(&mu, p).unwrap().characteristic;
            assert!((got - want).abs() <= 1e-12 * want);

            let b = random_values(depth, &mut rng(seed));
            let want = little_bmo_oracle(&b, mu.values(), lambda.values(), p, depth);
            let got = little_bmo(&grid(depth, &b), &mu, &lambda, p).unwrap().value;
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn p2_norm_matches_eigenvalue_oracle() {
    for t in 0..5u64 {
        let depth = 2;
        let mut r = rng(50 + t);
        let b = random_values(depth, &mut r);
        let mu = weight(depth, 2.0, 0.6, r.random());
        let lambda = weight(depth, 2.0, 0.6, r.random());
        let s1 = SignChoice1D::random(depth, &mut r, false).unwrap();
        let s2 = SignChoice1D::random(depth, &mut r, false).unwrap();
        let op = IteratedCommutator::new(&grid(depth, &b), s1, s2).unwrap();
        let m = OperatorMatrix::materialize(&op).unwrap();
        let want = p2_norm_oracle(m.matrix(), mu.values(), lambda.values());
        let got = opnorm_p2_exact(&m, &mu, &lambda).unwrap().value;
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }
}

#[test]
fn commutator_expands_over_haar_slices() {
    let depth = 2;
    let mut r = rng(60);
    let b = grid(depth, &random_values(depth, &mut r));
    let f = grid(depth, &random_values(depth, &mut r));
    let s1 = SignChoice1D::random(depth, &mut r, true).unwrap();
    let s2 = SignChoice1D::random(depth, &mut r, true).unwrap();
    let got = IteratedCommutator::new(&b, s1.clone(), s2.clone())
        .unwrap()
        .apply(&f)
        .unwrap();
    let mb = Multiplication::new(b.clone());
    let mut want = GridFunction2D::zeros(depth);
    for i in DyadicInterval::cancellative(depth) {
        for j in DyadicInterval::cancellative(depth) {
            let q1 = SliceProjection::new(depth, Axis::X, i).unwrap();
            let q2 = SliceProjection::new(depth, Axis::Y, j).unwrap();
            let c = Commutator::new(&q1, Commutator::new(&q2, &mb).unwrap())
                .unwrap()
                .apply(&f)
                .unwrap();
            let s = f64::from(s1.get(i)) * f64::from(s2.get(j));
            want = want.zip_map(&c, |a, v| a + s * v);
        }
    }
    assert!(got.max_abs_diff(&want) < 1e-13);
}

#[test]
fn exhaustive_sup_dominates_sampled_and_every_single_pair() {
    let depth = 2;
    let mut r = rng(70);
    let b = grid(depth, &random_values(depth, &mut r));
    let mu = weight(depth, 2.0, 0.5, 1);
    let lambda = weight(depth, 2.0, 0.5, 2);
    let search = LpSearch::default();
    let full = sup_commutator_norm(&b, &mu, &lambda, 2.0, SignMode::Exhaustive, &search).unwrap();
    let sampled = sup_commutator_norm(
        &b,
        &mu,
        &lambda,
        2.0,
        SignMode::Sampled {
            samples: 10,
            seed: 3,
        },
        &search,
    )
    .unwrap();
    assert!(sampled.value <= full.value);
    assert!(full.running_max.windows(2).all(|w| w[0] <= w[1]));
    let mut best = 0.0f64;
    for a in 0..8 {
        for c in 0..8 {
            let op = IteratedCommutator::new(
                &b,
                SignChoice1D::from_bits(depth, a).unwrap(),
                SignChoice1D::from_bits(depth, c).unwrap(),
            )
            .unwrap();
            let m = OperatorMatrix::materialize(&op).unwrap();
            best = best.max(p2_norm_oracle(m.matrix(), mu.values(), lambda.values()));
        }
    }
    assert!((full.value - best).abs() <= 1e-10 * best);
}
