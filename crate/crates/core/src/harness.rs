//! Monte Carlo experiments, truthfulness sweeps and traced runs over one
//! instance.
//!
//! Trial `t` of an experiment with base seed `s` uses the coin tape of seed
//! `s + t`. Trials run on the rayon pool; results are kept in seed order, so
//! reports do not depend on scheduling.

use std::io::Write;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coins::CoinTape;
use crate::demand::DemandOracle;
use crate::error::{Error, Result};
use crate::instance::{generate_instance, GeneratorSpec, Instance};
use crate::mechanism::{bidder_utility, final_mechanism, full_learning_path, Branch, ALPHA};
use crate::oracle::{brute_force_opt_capped, OptimalSolution, DEFAULT_ASSIGNMENT_CAP};
use crate::rational::{self, Rational};
use crate::trace::{build_trace, AnalysisTrace};
use crate::valuation::{BudgetAdditiveValuation, Valuation, XosValuation};

#[derive(Clone, Debug)]
pub enum InstanceSource {
    File(std::path::PathBuf),
    Generated(GeneratorSpec),
    Given(Instance),
}

impl InstanceSource {
    pub fn resolve(&self) -> Result<Instance> {
        match self {
            InstanceSource::File(path) => Instance::load(path),
            InstanceSource::Generated(spec) => generate_instance(spec),
            InstanceSource::Given(inst) => Ok(inst.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub trials: usize,
    pub seed: u64,
    /// Fail instead of falling back to welfare-only output when the oracle
    /// cannot solve the instance.
    pub require_ratio: bool,
    pub oracle_cap: u128,
    pub demand: DemandOracle,
}

impl ExperimentConfig {
    pub fn new(source: InstanceSource, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            source,
            trials,
            seed,
            require_ratio: false,
            oracle_cap: DEFAULT_ASSIGNMENT_CAP,
            demand: DemandOracle::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial_seed: u64,
    pub branch: Branch,
    #[serde(with = "rational::serde_decimal")]
    pub welfare: Rational,
    #[serde(with = "rational::serde_decimal")]
    pub payments_total: Rational,
    pub demand_queries: usize,
    pub value_queries: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; `None` for an empty sample.
    pub fn of(samples: &[f64]) -> Option<Quantiles> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let at = |f: f64| s[((s.len() - 1) as f64 * f).round() as usize];
        Some(Quantiles { min: s[0], q25: at(0.25), median: at(0.5), q75: at(0.75), max: s[s.len() - 1] })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
    #[serde(with = "rational::serde_decimal")]
    pub mean_welfare: Rational,
    #[serde(serialize_with = "optional_decimal")]
    pub opt: Option<Rational>,
    /// `OPT / mean welfare`; 1 when `OPT = 0`, infinite when only OPT is positive.
    pub ratio: Option<f64>,
    /// Quantiles of the per-trial efficiency `welfare / OPT` (1 when `OPT = 0`).
    pub efficiency: Option<Quantiles>,
    pub branch_counts: std::collections::BTreeMap<&'static str, usize>,
    pub violations: Vec<String>,
    pub warning: Option<String>,
}

fn optional_decimal<S: serde::Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&rational::format(r)),
        None => s.serialize_none(),
    }
}

/// `OPT / welfare` with the `OPT = 0 ⇒ 1` convention.
pub fn ratio(opt: &Rational, welfare: &Rational) -> f64 {
    if opt.is_zero() {
        1.0
    } else if welfare.is_zero() {
        f64::INFINITY
    } else {
        rational::to_f64(&(opt / welfare))
    }
}

pub fn run_trial(instance: &Instance, seed: u64, oracle: &DemandOracle) -> Result<TrialRecord> {
    let out = final_mechanism(&instance.valuations, instance.m, &CoinTape::new(seed), oracle)?;
    Ok(TrialRecord {
        trial_seed: seed,
        branch: out.branch,
        payments_total: out.allocation.total_payments(),
        demand_queries: out.total_demand_queries(),
        value_queries: out.total_value_queries(),
        welfare: out.welfare,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let instance = config.source.resolve()?;
    let (opt, warning) = match brute_force_opt_capped(&instance.valuations, instance.m, config.oracle_cap) {
        Ok(sol) => (Some(sol.welfare), None),
        Err(e @ Error::Capability(_)) if !config.require_ratio => (None, Some(format!("welfare only: {e}"))),
        Err(e) => return Err(e),
    };
    let trials: Vec<TrialRecord> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&instance, config.seed.wrapping_add(t), &config.demand))
        .collect::<Result<_>>()?;

    let mean_welfare = trials.iter().map(|t| &t.welfare).sum::<Rational>() / rational::int(trials.len() as i64);
    let mut violations = Vec::new();
    let mut branch_counts = std::collections::BTreeMap::new();
    for t in &trials {
        *branch_counts.entry(t.branch.label()).or_insert(0) += 1;
        if t.welfare < t.payments_total {
            violations.push(format!("seed {}: welfare below payments", t.trial_seed));
        }
        if opt.as_ref().is_some_and(|o| &t.welfare > o) {
            violations.push(format!("seed {}: welfare above OPT", t.trial_seed));
        }
    }
    let efficiency = opt.as_ref().and_then(|o| {
        let e: Vec<f64> =
            trials.iter().map(|t| if o.is_zero() { 1.0 } else { rational::to_f64(&(&t.welfare / o)) }).collect();
        Quantiles::of(&e)
    });
    Ok(ExperimentReport {
        ratio: opt.as_ref().map(|o| ratio(o, &mean_welfare)),
        efficiency,
        opt,
        mean_welfare,
        branch_counts,
        trials,
        violations,
        warning,
    })
}

impl ExperimentReport {
    /// Columns: trial_seed, branch, welfare, payments_total, demand_queries,
    /// value_queries. Amounts are exact decimal strings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial_seed", "branch", "welfare", "payments_total", "demand_queries", "value_queries"])
            .map_err(csv_error)?;
        for t in &self.trials {
            w.write_record([
                t.trial_seed.to_string(),
                t.branch.label().to_string(),
                rational::format(&t.welfare),
                rational::format(&t.payments_total),
                t.demand_queries.to_string(),
                t.value_queries.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// A random misreport over the same items: rescaled, shaded, reshaped into
/// other clauses, switched to a budget, or zeroed.
pub fn random_deviation(truth: &Valuation, rng: &mut impl Rng) -> Result<Valuation> {
    let m = truth.item_count();
    let singles: Vec<Rational> = (0..m).map(|j| truth.value(crate::ItemSet::single(j))).collect();
    let top = rational::to_f64(&truth.value(crate::ItemSet::full(m))).max(1.0);
    let entry = |rng: &mut dyn rand::RngCore| rational::from_f64_rounded(rng.gen_range(0.0..=top), 2);
    let kind = rng.gen_range(0..5);
    let v = match kind {
        0 => {
            let factor = [0.0, 0.25, 0.5, 0.9, 1.1, 2.0, 4.0][rng.gen_range(0..7)];
            let f = rational::from_f64_rounded(factor, 2);
            let rows = match truth {
                Valuation::Xos(x) => {
                    x.clauses().iter().map(|c| c.item_values().iter().map(|e| e * &f).collect()).collect()
                }
                Valuation::BudgetAdditive(_) => vec![singles.iter().map(|e| e * &f).collect()],
            };
            Valuation::from(XosValuation::from_rows(rows)?)
        }
        1 => {
            let row = singles
                .iter()
                .map(|e| if rng.gen_bool(0.5) { e * rational::from_f64_rounded(rng.gen_range(0.0..3.0), 2) } else { e.clone() })
                .collect();
            Valuation::from(XosValuation::additive(row)?)
        }
        2 => {
            let k = rng.gen_range(1..=3);
            let rows = (0..k).map(|_| (0..m).map(|_| entry(rng)).collect()).collect();
            Valuation::from(XosValuation::from_rows(rows)?)
        }
        3 => {
            let values = (0..m).map(|_| entry(rng)).collect();
            Valuation::from(BudgetAdditiveValuation::new(values, entry(rng))?)
        }
        _ => Valuation::zero(m),
    };
    Ok(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthViolation {
    pub seed: u64,
    pub bidder: usize,
    pub deviation: usize,
    #[serde(with = "rational::serde_decimal")]
    pub truthful_utility: Rational,
    #[serde(with = "rational::serde_decimal")]
    pub deviating_utility: Rational,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TruthReport {
    pub comparisons: usize,
    pub violations: Vec<TruthViolation>,
    /// Runs where some bidder got more than `α` demand queries, or all
    /// bidders together more than `α·n`.
    pub query_budget_violations: Vec<String>,
}

fn query_budget_check(seed: u64, out: &crate::mechanism::MechanismOutcome, problems: &mut Vec<String>) {
    let n = out.queries.len();
    if let Some(b) = out.queries.iter().position(|q| q.demand > ALPHA) {
        problems.push(format!("seed {seed}: bidder {b} got {} demand queries", out.queries[b].demand));
    }
    if out.total_demand_queries() > ALPHA * n {
        problems.push(format!("seed {seed}: {} demand queries for {n} bidders", out.total_demand_queries()));
    }
}

/// For each seed and bidder, compares the truthful utility with the utility
/// of `deviations` random misreports under the same coins. Misreports are
/// drawn from `deviation_seed`, seed and bidder.
pub fn truth_test(
    instance: &Instance,
    seeds: &[u64],
    deviations: usize,
    deviation_seed: u64,
    oracle: &DemandOracle,
) -> Result<TruthReport> {
    let parts: Vec<TruthReport> = seeds
        .par_iter()
        .map(|&seed| -> Result<TruthReport> {
            let tape = CoinTape::new(seed);
            let vals = &instance.valuations;
            let honest = final_mechanism(vals, instance.m, &tape, oracle)?;
            let mut report = TruthReport::default();
            query_budget_check(seed, &honest, &mut report.query_budget_violations);
            for bidder in 0..vals.len() {
                let truthful = bidder_utility(&honest, bidder, &vals[bidder])?;
                let mut rng = ChaCha8Rng::seed_from_u64(deviation_seed ^ seed.rotate_left(20) ^ (bidder as u64).rotate_left(44));
                for d in 0..deviations {
                    let mut reports = vals.clone();
                    reports[bidder] = random_deviation(&vals[bidder], &mut rng)?;
                    let out = final_mechanism(&reports, instance.m, &tape, oracle)?;
                    query_budget_check(seed, &out, &mut report.query_budget_violations);
                    let lied = bidder_utility(&out, bidder, &vals[bidder])?;
                    report.comparisons += 1;
                    if lied > truthful {
                        report.violations.push(TruthViolation {
                            seed,
                            bidder,
                            deviation: d,
                            truthful_utility: truthful.clone(),
                            deviating_utility: lied,
                        });
                    }
                }
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(TruthReport::default(), |mut acc, p| {
        acc.comparisons += p.comparisons;
        acc.violations.extend(p.violations);
        acc.query_budget_violations.extend(p.query_budget_violations);
        acc
    }))
}

/// Default price range for traced runs: the smallest and largest positive
/// supporting price of the optimum, or `[1, 1]` when there is none.
pub fn trace_price_range(opt: &OptimalSolution) -> (Rational, Rational) {
    let positive: Vec<&Rational> = opt.supporting_prices.iter().filter(|q| q.is_positive()).collect();
    match (positive.iter().min(), positive.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo.clone(), hi.clone()),
        _ => (rational::int(1), rational::int(1)),
    }
}

/// Runs the learning phase to completion over all bidders for each seed and
/// rebuilds the analysis trace.
pub fn trace_runs(
    instance: &Instance,
    opt: &OptimalSolution,
    range: (Rational, Rational),
    seeds: &[u64],
    oracle: &DemandOracle,
) -> Result<Vec<AnalysisTrace>> {
    let everyone: Vec<usize> = (0..instance.bidders()).collect();
    seeds
        .par_iter()
        .map(|&seed| {
            let record = full_learning_path(
                &instance.valuations,
                &everyone,
                instance.m,
                range.0.clone(),
                range.1.clone(),
                &CoinTape::new(seed),
                oracle,
            )?;
            build_trace(&record, &instance.valuations, opt)
        })
        .collect()
}

/// One row per (seed, iteration).
pub fn write_trace_csv<W: Write>(seeds: &[u64], traces: &[AnalysisTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "iteration",
        "correct_items",
        "correct_mass",
        "part_sizes",
        "auction_welfares",
        "j_star",
        "stop",
        "retained_mass",
        "sold_in_own_part",
        "slack",
        "overestimate_bound_holds",
    ])
    .map_err(csv_error)?;
    for (seed, t) in seeds.iter().zip(traces) {
        for it in &t.iterations {
            let join = |v: Vec<String>| v.join(" ");
            let (retained, sold, slack, holds) = match &it.overestimate {
                Some(c) => (rational::format(&c.retained), rational::format(&c.sold_in_own_part), rational::format(&c.slack), c.holds().to_string()),
                None => Default::default(),
            };
            w.write_record([
                seed.to_string(),
                it.iteration.to_string(),
                it.correct.len().to_string(),
                rational::format(&it.correct_mass),
                join(it.parts.iter().map(|d| d.len().to_string()).collect()),
                join(it.welfares.iter().map(rational::format).collect()),
                it.j_star.map(|j| j.to_string()).unwrap_or_default(),
                it.stop.to_string(),
                retained,
                sold,
                slack,
                holds,
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}
