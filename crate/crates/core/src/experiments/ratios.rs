use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    trial_inputs, Check, ExperimentConfig, RatioRecord, RatioReport, RowFlag, TrialInputs,
};
use crate::dyadic::{haar_forward, indicator, DyadicRectangle, GridFunction2D, HaarType, Shadow};
use crate::error::Result;
use crate::norms::{
    bmo_prod_one_weight, bmo_prod_two_weight, little_bmo, lp_weighted_norm, BmoWitness,
};
use crate::operators::{Lambda, LinearOperator, OperatorMatrix, Paraproduct, SignChoice1D};
use crate::opnorm::{commutator_norm, opnorm, sup_commutator_norm, LpSearch};
use crate::weights::{
    ap_characteristic, bloom_bound, bloom_weight, conjugate_exponent, conjugate_weight, Weight,
};

/// Relative slack for inequalities between independently computed norms.
const INEQ_TOL: f64 = 1e-12;

/// Coefficients below this (relative to `max|b|`) count as zero when flagging degenerate symbols.
const DEGENERATE_TOL: f64 = 1e-13;

/// `{-1,0,1}` sign pairs tried per commutator trial.
const ZERO_SIGN_SPOT_CHECKS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LittleBmoEntry {
    pub trial: usize,
    pub value: f64,
    pub rect: DyadicRectangle,
}

/// A counted, unasserted observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub name: String,
    pub count: usize,
    pub of: usize,
}

pub fn is_degenerate(b: &GridFunction2D) -> bool {
    let scale = b.max_abs().max(1.0);
    haar_forward(b)
        .bicancellative_part()
        .as_slice()
        .iter()
        .all(|v| v.abs() <= DEGENERATE_TOL * scale)
}

fn characteristics(t: &TrialInputs, p: f64) -> Result<([f64; 3], Weight)> {
    let nu = bloom_weight(&t.mu.weight, &t.lambda.weight, p)?;
    let a2 = ap_characteristic(&nu, 2.0)?.characteristic;
    Ok((
        [
            t.mu.report.characteristic,
            t.lambda.report.characteristic,
            a2,
        ],
        nu,
    ))
}

fn unweighted_p2(config: &ExperimentConfig, t: &TrialInputs) -> bool {
    config.p == 2.0 && t.delta == 0.0
}

fn run_trials<T: Send>(
    config: &ExperimentConfig,
    per_trial: impl Fn(&TrialInputs) -> Result<T> + Sync,
) -> Result<Vec<(TrialInputs, T)>> {
    config.validate()?;
    (0..config.total_trials())
        .into_par_iter()
        .map(|k| {
            let t = trial_inputs(config, k)?;
            let out = per_trial(&t)?;
            Ok((t, out))
        })
        .collect()
}

fn report(
    config: &ExperimentConfig,
    command: &str,
    labels: [&str; 3],
    rows: Vec<RatioRecord>,
) -> RatioReport {
    RatioReport {
        command: command.into(),
        config: config.clone(),
        left: labels[0].into(),
        right: labels[1].into(),
        mid: labels[2].into(),
        buckets: Vec::new(),
        checks: Vec::new(),
        passed: false,
        little_bmo: Vec::new(),
        observations: Vec::new(),
        rows,
    }
}

fn count_check(name: &str, failures: &[usize], of: usize) -> Check {
    Check::new(
        name,
        failures.is_empty(),
        if failures.is_empty() {
            format!("holds in {of} of {of} rows")
        } else {
            format!(
                "fails in {} of {of} rows (trials {failures:?})",
                failures.len()
            )
        },
    )
}

fn bloom_check(outs: &[(TrialInputs, impl Sized)], p: f64) -> Result<Check> {
    let mut bad = Vec::new();
    for (t, _) in outs {
        if !bloom_bound(&t.mu.weight, &t.lambda.weight, p)?.holds(1e-12) {
            bad.push(t.trial);
        }
    }
    Ok(count_check("bloom_characteristic_bound", &bad, outs.len()))
}

/// Product BMO with the Bloom weight against the two-weight product BMO and its dual.
///
/// `left = ‖b‖_{BMO(ν)}`, `right = ‖b‖_{BMO(μ,λ,p)}`, `mid = ‖b‖_{BMO(λ',μ',p')}`.
pub fn cmd_jn(config: &ExperimentConfig) -> Result<RatioReport> {
    let p = config.p;
    let q = conjugate_exponent(p);
    let outs = run_trials(config, |t| {
        let strategy = config.bmo_strategy(t.trial);
        let (chars, nu) = characteristics(t, p)?;
        let left = bmo_prod_one_weight(&t.b, &nu, strategy)?.value;
        let right = bmo_prod_two_weight(&t.b, &t.mu.weight, &t.lambda.weight, p, strategy)?.value;
        let mid = bmo_prod_two_weight(
            &t.b,
            &conjugate_weight(&t.lambda.weight, p)?,
            &conjugate_weight(&t.mu.weight, p)?,
            q,
            strategy,
        )?
        .value;
        Ok(RatioRecord::new(
            t.trial,
            chars,
            left,
            right,
            mid,
            is_degenerate(&t.b),
        ))
    })?;

    let mut bad = Vec::new();
    let mut considered = 0;
    for (t, row) in &outs {
        if unweighted_p2(config, t) && row.flag == RowFlag::Ok {
            considered += 1;
            if row.ratio_lr.is_none_or(|r| (r - 1.0).abs() > INEQ_TOL) {
                bad.push(t.trial);
            }
        }
    }
    let mut checks = vec![bloom_check(&outs, p)?];
    if considered > 0 {
        checks.push(count_check("unit_weights_ratio_one", &bad, considered));
    }
    let mut rep = report(
        config,
        "jn",
        ["bmo_nu", "bmo_mu_lambda_p", "bmo_dual"],
        outs.into_iter().map(|(_, r)| r).collect(),
    );
    rep.checks = checks;
    rep.summarize();
    Ok(rep)
}

/// Iterated Haar multiplier commutators against the one-weight BMO norm.
///
/// `left = sup ‖[T^1,[T^2,b]]‖`, `right = ‖b‖_{BMO(ν)}`, `mid = ‖Λ_b‖`, all `L^p(μ) → L^p(λ)`.
pub fn cmd_commutator(config: &ExperimentConfig) -> Result<RatioReport> {
    let p = config.p;
    let outs = run_trials(config, |t| {
        let (chars, nu) = characteristics(t, p)?;
        let search = config.lp_search(t.trial);
        let (mu, lambda) = (&t.mu.weight, &t.lambda.weight);
        let left =
            sup_commutator_norm(&t.b, mu, lambda, p, config.sign_mode(t.trial), &search)?.value;
        let right = bmo_prod_one_weight(&t.b, &nu, config.bmo_strategy(t.trial))?.value;
        let lam = OperatorMatrix::materialize(&Lambda::new(&t.b))?;
        let mid = opnorm(&lam, mu, lambda, p, &search)?.value;

        let mut rng = config.rng(t.trial);
        rng.set_word_pos(1 << 20);
        let mut zero_sign_max = 0.0f64;
        for _ in 0..ZERO_SIGN_SPOT_CHECKS {
            let s1 = SignChoice1D::random(t.b.depth(), &mut rng, true)?;
            let s2 = SignChoice1D::random(t.b.depth(), &mut rng, true)?;
            zero_sign_max =
                zero_sign_max.max(commutator_norm(&t.b, &s1, &s2, mu, lambda, p, &search)?.value);
        }
        let row = RatioRecord::new(t.trial, chars, left, right, mid, is_degenerate(&t.b));
        Ok((row, zero_sign_max))
    })?;

    let mut bad = Vec::new();
    let mut considered = 0;
    let mut excess = 0;
    for (t, (row, zmax)) in &outs {
        if unweighted_p2(config, t) {
            considered += 1;
            if row.left > 4.0 * row.mid * (1.0 + INEQ_TOL) + INEQ_TOL {
                bad.push(t.trial);
            }
        }
        if *zmax > row.left * (1.0 + 1e-9) {
            excess += 1;
        }
    }
    let mut checks = vec![bloom_check(&outs, p)?];
    if considered > 0 {
        checks.push(count_check(
            "commutator_at_most_four_lambda",
            &bad,
            considered,
        ));
    }
    let total = outs.len();
    let mut rep = report(
        config,
        "commutator",
        ["sup_commutator", "bmo_nu", "lambda_norm"],
        outs.into_iter().map(|(_, (r, _))| r).collect(),
    );
    rep.checks = checks;
    rep.observations.push(Observation {
        name: "zero_sign_pair_exceeds_sup".into(),
        count: excess,
        of: total,
    });
    rep.summarize();
    Ok(rep)
}

struct ParaproductTrial {
    row: RatioRecord,
    testing: f64,
    little: LittleBmoEntry,
}

/// `‖Π_b^{(11)}‖_{L^p(μ)→L^p(λ)}` against two-weight and Bloom-weight product BMO.
///
/// `left = ‖Π^{(11)}_b‖`, `right = ‖b‖_{BMO(μ,λ,p)}`, `mid = ‖b‖_{BMO(ν)}`. The norm search is
/// warm-started at `1_Ω` for the maximizing mask `Ω` of `right`, and the testing ratio
/// `‖Π^{(11)}_b 1_Ω‖_{L^p(λ)} / μ(Ω)^{1/p}` is recorded.
pub fn cmd_paraproduct(config: &ExperimentConfig) -> Result<RatioReport> {
    let p = config.p;
    let outs = run_trials(config, |t| {
        let (chars, nu) = characteristics(t, p)?;
        let strategy = config.bmo_strategy(t.trial);
        let (mu, lambda) = (&t.mu.weight, &t.lambda.weight);
        let bmo = bmo_prod_two_weight(&t.b, mu, lambda, p, strategy)?;
        let omega = match &bmo.witness {
            BmoWitness::Mask(m) => m.clone(),
            BmoWitness::Rect(r) => Shadow::from_rect(t.b.depth(), *r),
        };
        let test_fn = indicator(&omega);
        let pi = Paraproduct::new(HaarType::T11, &t.b);
        let testing = if omega.is_empty() {
            0.0
        } else {
            lp_weighted_norm(&pi.apply(&test_fn)?, lambda, p)? / lp_weighted_norm(&test_fn, mu, p)?
        };
        let m = OperatorMatrix::materialize(&pi)?;
        let search = LpSearch {
            warm_starts: vec![test_fn],
            ..config.lp_search(t.trial)
        };
        let left = opnorm(&m, mu, lambda, p, &search)?.value;
        let mid = bmo_prod_one_weight(&t.b, &nu, strategy)?.value;
        let lb = little_bmo(&t.b, mu, lambda, p)?;
        let rect = match lb.witness {
            BmoWitness::Rect(r) => r,
            BmoWitness::Mask(_) => DyadicRectangle::UNIT,
        };
        Ok(ParaproductTrial {
            row: RatioRecord::new(t.trial, chars, left, bmo.value, mid, is_degenerate(&t.b)),
            testing,
            little: LittleBmoEntry {
                trial: t.trial,
                value: lb.value,
                rect,
            },
        })
    })?;

    let total = outs.len();
    let mut below_testing = Vec::new();
    let mut unweighted_bad = Vec::new();
    let mut considered = 0;
    let mut direction_holds = 0;
    for (t, o) in &outs {
        if o.row.left < o.testing * (1.0 - INEQ_TOL) {
            below_testing.push(t.trial);
        }
        if o.row.left >= o.row.right * (1.0 - INEQ_TOL) {
            direction_holds += 1;
        }
        if unweighted_p2(config, t) {
            considered += 1;
            if o.row.left < o.row.right * (1.0 - INEQ_TOL) {
                unweighted_bad.push(t.trial);
            }
        }
    }
    let mut checks = vec![
        bloom_check(&outs, p)?,
        count_check("norm_at_least_testing_ratio", &below_testing, total),
    ];
    if considered > 0 {
        checks.push(count_check(
            "testing_direction_unweighted",
            &unweighted_bad,
            considered,
        ));
    }
    let mut rows = Vec::with_capacity(total);
    let mut little = Vec::with_capacity(total);
    for (_, o) in outs {
        rows.push(o.row);
        little.push(o.little);
    }
    let mut rep = report(
        config,
        "paraproduct",
        ["paraproduct_norm", "bmo_mu_lambda_p", "bmo_nu"],
        rows,
    );
    rep.checks = checks;
    rep.little_bmo = little;
    rep.observations.push(Observation {
        name: "norm_at_least_bmo".into(),
        count: direction_holds,
        of: total,
    });
    rep.summarize();
    Ok(rep)
}
