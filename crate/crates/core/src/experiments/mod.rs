//! Seeded desk-scale experiments behind the `haar-bloom` binary.
//!
//! Every random draw of trial `t` comes from ChaCha8 seeded with the config
//! seed on stream `t`, so any row can be recomputed from `(seed, t)` alone.

mod identities;
mod khintchine;
mod ratios;

pub use identities::{cmd_identities, IdentityCheck, IdentityReport};
pub use identities::{IDENTITY_NAMES, IDENTITY_SUITE_TOL};
pub use khintchine::{
    cmd_khintchine, khintchine_moments, neumaier_sum, operator_khintchine_gap, KhintchineReport,
    KhintchineRow, MonteCarloEntry, MOMENTS,
};
pub use ratios::{
    cmd_commutator, cmd_jn, cmd_paraproduct, is_degenerate, LittleBmoEntry, Observation,
};

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dyadic::{haar_inverse, DyadicRectangle, GridFunction2D, HaarCoefficients2D};
use crate::error::{Error, Result};
use crate::norms::{BmoStrategy, StrategyKind};
use crate::opnorm::{LpSearch, SignMode};
use crate::weights::{random_ap_weight, GeneratedWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Exhaustive,
    Sampled,
}

/// Source of the symbol `b` in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolSource {
    /// I.i.d. standard normal `(00)` coefficients, other blocks zero.
    Gaussian,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub depth: u32,
    pub p: f64,
    /// Weight strengths; bucket `k` owns trials `k·trials .. (k+1)·trials`.
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub mode: ModeKind,
    /// Sign pairs drawn in sampled mode.
    pub samples: usize,
    /// Random restarts for heuristic BMO and `p ≠ 2` norm searches.
    pub restarts: usize,
    pub symbol: SymbolSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            p: 2.0,
            deltas: vec![0.5],
            trials: 20,
            seed: 0,
            strategy: StrategyKind::Exact,
            mode: ModeKind::Exhaustive,
            samples: 64,
            restarts: 4,
            symbol: SymbolSource::Gaussian,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn total_trials(&self) -> usize {
        self.trials * self.deltas.len()
    }

    pub fn delta_for(&self, trial: usize) -> f64 {
        self.deltas[(trial / self.trials.max(1)).min(self.deltas.len() - 1)]
    }

    pub fn validate(&self) -> Result<()> {
        crate::dyadic::check_depth(self.depth)?;
        crate::error::check_exponent(self.p)?;
        if self.deltas.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one delta is required".into(),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return Err(Error::InvalidParameter(format!(
                "delta {d} must lie in [0, 1)"
            )));
        }
        Ok(())
    }

    pub fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }

    pub fn bmo_strategy(&self, trial: usize) -> BmoStrategy {
        match self.strategy {
            StrategyKind::Exact => BmoStrategy::Exact,
            StrategyKind::Heuristic => BmoStrategy::Heuristic {
                restarts: self.restarts,
                seed: self.seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            },
        }
    }

    pub fn sign_mode(&self, trial: usize) -> SignMode {
        match self.mode {
            ModeKind::Exhaustive => SignMode::Exhaustive,
            ModeKind::Sampled => SignMode::Sampled {
                samples: self.samples,
                seed: self.seed ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03),
            },
        }
    }

    pub fn lp_search(&self, trial: usize) -> LpSearch {
        LpSearch {
            restarts: self.restarts,
            seed: self.seed.wrapping_add(trial as u64),
            warm_starts: Vec::new(),
        }
    }
}

/// `b = Σ_R g_R h_R` with `g_R` i.i.d. standard normal.
pub fn random_symbol<R: RngCore + ?Sized>(depth: u32, rng: &mut R) -> GridFunction2D {
    let mut c = HaarCoefficients2D::zeros(depth);
    for r in DyadicRectangle::cancellative(depth) {
        c.set_c00(r, StandardNormal.sample(rng));
    }
    haar_inverse(&c)
}

/// Cell values i.i.d. uniform on `[-1, 1)`.
pub fn random_function<R: RngCore + ?Sized>(depth: u32, rng: &mut R) -> GridFunction2D {
    use rand::Rng;
    GridFunction2D::from_fn(depth, |_, _| rng.random_range(-1.0..1.0))
}

/// Everything random in one ratio trial.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub trial: usize,
    pub delta: f64,
    pub b: GridFunction2D,
    pub mu: GeneratedWeight,
    pub lambda: GeneratedWeight,
}

pub fn trial_inputs(config: &ExperimentConfig, trial: usize) -> Result<TrialInputs> {
    let delta = config.delta_for(trial);
    let mut rng = config.rng(trial);
    let b = match config.symbol {
        SymbolSource::Gaussian => random_symbol(config.depth, &mut rng),
        SymbolSource::Constant(c) => GridFunction2D::constant(config.depth, c),
    };
    let mu = random_ap_weight(config.depth, config.p, delta, rng.next_u64())?;
    let lambda = random_ap_weight(config.depth, config.p, delta, rng.next_u64())?;
    Ok(TrialInputs {
        trial,
        delta,
        b,
        mu: GeneratedWeight {
            weight: mu.weight.with_role(crate::weights::WeightRole::Mu),
            ..mu
        },
        lambda: GeneratedWeight {
            weight: lambda.weight.with_role(crate::weights::WeightRole::Lambda),
            ..lambda
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowFlag {
    Ok,
    /// The symbol has no bi-cancellative part; every value is 0 and no ratio is formed.
    Degenerate,
}

/// One CSV row: `trial,ap_mu,ap_lambda,a2_nu,left,right,mid,ratio_lr,ratio_lm,flag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub trial: usize,
    pub ap_mu: f64,
    pub ap_lambda: f64,
    pub a2_nu: f64,
    pub left: f64,
    pub right: f64,
    pub mid: f64,
    pub ratio_lr: Option<f64>,
    pub ratio_lm: Option<f64>,
    pub flag: RowFlag,
}

impl RatioRecord {
    pub(crate) fn new(
        trial: usize,
        chars: [f64; 3],
        left: f64,
        right: f64,
        mid: f64,
        degenerate: bool,
    ) -> Self {
        let ratio = |a: f64, b: f64| if degenerate { None } else { Some(a / b) };
        Self {
            trial,
            ap_mu: chars[0],
            ap_lambda: chars[1],
            a2_nu: chars[2],
            left,
            right,
            mid,
            ratio_lr: ratio(left, right),
            ratio_lm: ratio(left, mid),
            flag: if degenerate {
                RowFlag::Degenerate
            } else {
                RowFlag::Ok
            },
        }
    }

    /// Non-degenerate rows must have positive finite ratios.
    pub fn ratios_are_sane(&self) -> bool {
        match self.flag {
            RowFlag::Degenerate => [self.left, self.right, self.mid]
                .iter()
                .all(|v| v.abs() <= 1e-12),
            _ => [self.ratio_lr, self.ratio_lm]
                .iter()
                .all(|r| r.is_some_and(|v| v.is_finite() && v > 0.0)),
        }
    }
}

pub fn write_records_csv<W: Write>(rows: &[RatioRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(r: R) -> Result<Vec<RatioRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        };
        Some(Self {
            min: v[0],
            median,
            max: v[m - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub delta: f64,
    pub trials: usize,
    pub degenerate: usize,
    pub ratio_lr: Option<Stats>,
    pub ratio_lm: Option<Stats>,
    pub ap_mu: Option<Stats>,
    pub ap_lambda: Option<Stats>,
    pub a2_nu: Option<Stats>,
}

/// An asserted invariant and how it fared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub left: String,
    pub right: String,
    pub mid: String,
    pub buckets: Vec<BucketSummary>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub little_bmo: Vec<LittleBmoEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub observations: Vec<Observation>,
    #[serde(skip)]
    pub rows: Vec<RatioRecord>,
}

impl RatioReport {
    pub(crate) fn summarize(&mut self) {
        let cfg = &self.config;
        self.buckets = cfg
            .deltas
            .iter()
            .enumerate()
            .map(|(k, &delta)| {
                let rows: Vec<&RatioRecord> = self
                    .rows
                    .iter()
                    .filter(|r| r.trial / cfg.trials.max(1) == k)
                    .collect();
                BucketSummary {
                    delta,
                    trials: rows.len(),
                    degenerate: rows
                        .iter()
                        .filter(|r| r.flag == RowFlag::Degenerate)
                        .count(),
                    ratio_lr: Stats::of(rows.iter().filter_map(|r| r.ratio_lr)),
                    ratio_lm: Stats::of(rows.iter().filter_map(|r| r.ratio_lm)),
                    ap_mu: Stats::of(rows.iter().map(|r| r.ap_mu)),
                    ap_lambda: Stats::of(rows.iter().map(|r| r.ap_lambda)),
                    a2_nu: Stats::of(rows.iter().map(|r| r.a2_nu)),
                }
            })
            .collect();
        let sane = self.rows.iter().filter(|r| !r.ratios_are_sane()).count();
        self.checks.insert(
            0,
            Check::new(
                "ratios_positive_finite",
                sane == 0,
                format!(
                    "{sane} of {} rows with a non-positive or non-finite ratio",
                    self.rows.len()
                ),
            ),
        );
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_records_csv(&self.rows, w)
    }
}

/// Writes the CSV to `path` and the JSON summary next to it (`.json`).
pub fn write_ratio_outputs(report: &RatioReport, path: &Path) -> Result<PathBuf> {
    report.write_csv(std::fs::File::create(path)?)?;
    let json_path = summary_path(path);
    std::fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(json_path)
}

pub fn summary_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        path.with_extension("json")
    }
}
