use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{random_function, random_symbol, Check, ExperimentConfig};
use crate::dyadic::{DyadicInterval, GridFunction2D};
use crate::error::{Error, Result};
use crate::operators::{
    Axis, Commutator, IteratedCommutator, LinearOperator, Multiplication, SignChoice1D,
    SliceProjection,
};

/// Moments `q` reported by [`khintchine_moments`].
pub const MOMENTS: [f64; 3] = [1.0, 2.0, 4.0];

/// Largest `rows · cols` for exhaustive sign enumeration.
pub const KHINTCHINE_MAX_ENTRIES: usize = 16;

pub const MONTE_CARLO_SAMPLES: usize = 4096;

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn bilinear(a: &[f64], cols: usize, s: u32, t: u32) -> f64 {
    let sign = |bits: u32, k: usize| if bits >> k & 1 == 1 { 1.0 } else { -1.0 };
    neumaier_sum(
        a.iter()
            .enumerate()
            .map(|(k, v)| v * sign(s, k / cols) * sign(t, k % cols)),
    )
}

/// Exact `E|Σ_{ij} a_ij σ_i τ_j|^q` for `q` in [`MOMENTS`], enumerating every sign pair.
///
/// `a` is row-major with `rows · cols ≤ 16`.
pub fn khintchine_moments(a: &[f64], rows: usize, cols: usize) -> Result<[f64; 3]> {
    if rows == 0 || cols == 0 || rows * cols > KHINTCHINE_MAX_ENTRIES {
        return Err(Error::InvalidParameter(format!(
            "coefficient matrix {rows}x{cols} must be non-empty with at most {KHINTCHINE_MAX_ENTRIES} entries"
        )));
    }
    if a.len() != rows * cols {
        return Err(Error::Shape {
            expected: rows * cols,
            got: a.len(),
        });
    }
    let values: Vec<f64> = (0..1u32 << rows)
        .flat_map(|s| (0..1u32 << cols).map(move |t| (s, t)))
        .map(|(s, t)| bilinear(a, cols, s, t))
        .collect();
    let count = values.len() as f64;
    Ok(MOMENTS.map(|q| neumaier_sum(values.iter().map(|v| v.abs().powf(q))) / count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineRow {
    pub trial: usize,
    pub rows: usize,
    pub cols: usize,
    pub sum_sq: f64,
    pub m1: f64,
    pub m2: f64,
    pub m4: f64,
    /// `m1 / (Σ a²)^{1/2}`
    pub ratio_q1: f64,
    /// `m4 / (Σ a²)²`
    pub ratio_q4: f64,
    pub q2_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEntry {
    pub trial: usize,
    pub exact_m4: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineReport {
    pub trials: usize,
    pub seed: u64,
    pub ratio_q1_range: [f64; 2],
    pub ratio_q4_range: [f64; 2],
    pub monte_carlo: Vec<MonteCarloEntry>,
    /// Relative gap between the sign-averaged `‖[T^1,[T^2,b]]f‖²` and `Σ_{I,J} ‖[Q_I^1,[Q_J^2,b]]f‖²`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub operator_rel_error: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<KhintchineRow>,
}

impl KhintchineReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Shapes cycle through `1..=4 × 1..=4`.
fn shape(trial: usize) -> (usize, usize) {
    (1 + trial % 4, 1 + (trial / 4) % 4)
}

fn row(config: &ExperimentConfig, trial: usize) -> Result<KhintchineRow> {
    let (rows, cols) = shape(trial);
    let mut rng = config.rng(trial);
    let a: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let sum_sq = neumaier_sum(a.iter().map(|v| v * v));
    let [m1, m2, m4] = khintchine_moments(&a, rows, cols)?;
    Ok(KhintchineRow {
        trial,
        rows,
        cols,
        sum_sq,
        m1,
        m2,
        m4,
        ratio_q1: m1 / sum_sq.sqrt(),
        ratio_q4: m4 / (sum_sq * sum_sq),
        q2_rel_error: (m2 - sum_sq).abs() / sum_sq,
    })
}

fn monte_carlo(config: &ExperimentConfig, trial: usize) -> Result<MonteCarloEntry> {
    let mut rng = config.rng(trial);
    let a: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
    let exact_m4 = khintchine_moments(&a, 2, 2)?[2];
    let draws: Vec<f64> = (0..MONTE_CARLO_SAMPLES)
        .map(|_| {
            let s = rng.random_range(0..4u32);
            let t = rng.random_range(0..4u32);
            bilinear(&a, 2, s, t).powi(4)
        })
        .collect();
    let m = draws.len() as f64;
    let estimate = neumaier_sum(draws.iter().copied()) / m;
    let var = neumaier_sum(draws.iter().map(|v| (v - estimate).powi(2))) / (m - 1.0);
    let std_error = (var / m).sqrt();
    Ok(MonteCarloEntry {
        trial,
        exact_m4,
        estimate,
        std_error,
        within_3se: (estimate - exact_m4).abs() <= 3.0 * std_error,
    })
}

fn l2_sq(f: &GridFunction2D) -> f64 {
    neumaier_sum(f.values().iter().map(|v| v * v)) * f.cell_area()
}

/// Sign-averaged `‖[T_{σ1}^1,[T_{σ2}^2,b]] f‖²` against the square sum of its Haar slices, at depth ≤ 2.
pub fn operator_khintchine_gap(b: &GridFunction2D, f: &GridFunction2D) -> Result<f64> {
    let depth = b.depth();
    b.same_depth(f)?;
    if depth > crate::opnorm::EXHAUSTIVE_SIGN_MAX_DEPTH {
        return Err(Error::DepthTooLarge {
            depth,
            max: crate::opnorm::EXHAUSTIVE_SIGN_MAX_DEPTH,
            what: "exhaustive sign averaging",
        });
    }
    let count = 1u64 << ((1u32 << depth) - 1);
    let pairs: Vec<(u64, u64)> = (0..count)
        .flat_map(|a| (0..count).map(move |c| (a, c)))
        .collect();
    let norms: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, c)| {
            let op = IteratedCommutator::new(
                b,
                SignChoice1D::from_bits(depth, a)?,
                SignChoice1D::from_bits(depth, c)?,
            )?;
            Ok(l2_sq(&op.apply(f)?))
        })
        .collect::<Result<_>>()?;
    let mean = neumaier_sum(norms) / pairs.len() as f64;

    let mb = Multiplication::new(b.clone());
    let mut pieces = Vec::new();
    for i in DyadicInterval::cancellative(depth) {
        for j in DyadicInterval::cancellative(depth) {
            let q1 = SliceProjection::new(depth, Axis::X, i)?;
            let q2 = SliceProjection::new(depth, Axis::Y, j)?;
            pieces.push(l2_sq(
                &Commutator::new(&q1, Commutator::new(&q2, &mb)?)?.apply(f)?,
            ));
        }
    }
    let total = neumaier_sum(pieces);
    Ok(if total == 0.0 {
        mean
    } else {
        (mean - total).abs() / total
    })
}

fn range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| {
        [lo.min(v), hi.max(v)]
    })
}

pub const KHINTCHINE_Q2_TOL: f64 = 1e-14;
const OPERATOR_TOL: f64 = 1e-12;

/// Rademacher chaos moments for random coefficient matrices up to `4×4`.
pub fn cmd_khintchine(config: &ExperimentConfig) -> Result<KhintchineReport> {
    let trials = config.total_trials();
    let rows: Vec<KhintchineRow> = (0..trials)
        .into_par_iter()
        .map(|t| row(config, t))
        .collect::<Result<_>>()?;

    let monte_carlo: Vec<MonteCarloEntry> = (0..trials.min(8))
        .into_par_iter()
        .map(|t| monte_carlo(config, trials + t))
        .collect::<Result<_>>()?;

    let mut checks = Vec::new();
    let worst = rows.iter().map(|r| r.q2_rel_error).fold(0.0f64, f64::max);
    checks.push(Check::new(
        "q2_equals_square_sum",
        worst <= KHINTCHINE_Q2_TOL,
        format!("max relative error {worst:e} over {} matrices", rows.len()),
    ));
    let single = khintchine_moments(&[1.0], 1, 1)?;
    checks.push(Check::new(
        "single_entry_moments_one",
        single == [1.0; 3],
        format!("{single:?}"),
    ));
    // Jensen and Hölder order the moments regardless of the matrix.
    let ordered = rows
        .iter()
        .all(|r| r.ratio_q1 <= 1.0 + 1e-12 && r.ratio_q4 >= 1.0 - 1e-12);
    checks.push(Check::new(
        "moment_ordering",
        ordered,
        "E|X| <= (E X^2)^(1/2) <= (E X^4)^(1/4)",
    ));

    let operator_rel_error = if config.depth <= crate::opnorm::EXHAUSTIVE_SIGN_MAX_DEPTH {
        let mut rng = config.rng(trials + 8);
        let b = random_symbol(config.depth, &mut rng);
        let f = random_function(config.depth, &mut rng);
        let gap = operator_khintchine_gap(&b, &f)?;
        checks.push(Check::new(
            "operator_sign_average",
            gap <= OPERATOR_TOL,
            format!("relative gap {gap:e}"),
        ));
        Some(gap)
    } else {
        None
    };

    let passed = checks.iter().all(|c| c.passed);
    Ok(KhintchineReport {
        trials,
        seed: config.seed,
        ratio_q1_range: range(rows.iter().map(|r| r.ratio_q1)),
        ratio_q4_range: range(rows.iter().map(|r| r.ratio_q4)),
        monte_carlo,
        operator_rel_error,
        checks,
        passed,
        rows,
    })
}
