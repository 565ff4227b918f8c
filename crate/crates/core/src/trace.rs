//! Reconstruction of the analysis quantities of a learning run against a
//! fixed optimal allocation.
//!
//! Given the optimum `O` with supporting prices `q` and the tree `T*` the run
//! used:
//! - `O*` keeps the allocated items whose `q` lies in a retained bin;
//! - `q⁽ⁱ⁾` zeroes items outside `O*` and items whose owner is in `N_1..N_{i−1}`;
//! - `C⁽ⁱ⁾` holds the items whose `p⁽ᵏ⁾` and `q⁽ᵏ⁾` share a level-`k` node for
//!   every `k ≤ i`;
//! - `D⁽ⁱ⁾_j` holds the items of `C⁽ⁱ⁾` whose `q⁽ⁱ⁾` falls in the `j`-th child of
//!   that shared node.

use num_traits::Zero;
use serde::Serialize;

use crate::allocation::welfare;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::mechanism::LearningRecord;
use crate::oracle::OptimalSolution;
use crate::price::PriceVector;
use crate::price_tree::PriceTree;
use crate::rational::{self, Rational};
use crate::valuation::Valuation;

#[derive(Clone, Debug)]
pub struct OverestimateCheck {
    /// `q⁽ⁱ⁾` mass of the items of `C⁽ⁱ⁾` whose updated price shares a
    /// level-`(i+1)` node with `q⁽ⁱ⁾`.
    pub retained: Rational,
    /// `Σ_j q⁽ⁱ⁾(A⁽ⁱ⁾_j ∩ D⁽ⁱ⁾_j)`.
    pub sold_in_own_part: Rational,
    /// `opt / (10β)`.
    pub slack: Rational,
}

impl OverestimateCheck {
    pub fn holds(&self) -> bool {
        self.retained >= &self.sold_in_own_part - &self.slack
    }
}

#[derive(Clone, Debug)]
pub struct TraceIteration {
    /// 1-based; runs to `β+1`.
    pub iteration: usize,
    pub prices: PriceVector,
    pub q: PriceVector,
    pub correct: ItemSet,
    /// `q⁽ⁱ⁾(C⁽ⁱ⁾)`.
    pub correct_mass: Rational,
    /// `D⁽ⁱ⁾_1..D⁽ⁱ⁾_α`; empty in the last iteration.
    pub parts: Vec<ItemSet>,
    /// `V(A⁽ⁱ⁾_j)`; for the last iteration, the final auction's welfare.
    pub welfares: Vec<Rational>,
    pub j_star: Option<usize>,
    pub stop: bool,
    pub overestimate: Option<OverestimateCheck>,
}

#[derive(Clone, Debug)]
pub struct AnalysisTrace {
    pub opt: Rational,
    pub o_star: ItemSet,
    pub q_star: PriceVector,
    pub alpha: usize,
    pub beta: usize,
    pub iterations: Vec<TraceIteration>,
}

/// Rebuilds every quantity from a complete learning record, as produced by
/// [`crate::mechanism::full_learning_path`].
pub fn build_trace(record: &LearningRecord, valuations: &[Valuation], opt: &OptimalSolution) -> Result<AnalysisTrace> {
    let params = &record.params;
    let (alpha, beta) = (params.alpha, params.beta);
    if record.iterations.len() != beta || record.learned_prices.len() != beta + 1 || record.final_auction.is_none() {
        return Err(Error::Domain(format!(
            "trace needs all {beta} iterations and the final auction, record has {} iterations",
            record.iterations.len()
        )));
    }
    if record.groups.len() != beta + 1 {
        return Err(Error::Domain("record has the wrong number of groups".into()));
    }
    let modified = record.tree()?;
    let tree: &PriceTree = &modified;
    let m = opt.supporting_prices.len();
    let n = opt.allocation.bidders();
    if valuations.len() != n || record.learned_prices.iter().any(|p| p.len() != m) {
        return Err(Error::Shape("trace inputs disagree on n or m".into()));
    }

    let q = &opt.supporting_prices;
    let o_star: ItemSet = opt
        .allocation
        .allocated()
        .iter()
        .filter(|&l| tree.containing_node(&q[l], 1).is_some())
        .collect();
    let q_star: PriceVector = (0..m).map(|l| if o_star.contains(l) { q[l].clone() } else { rational::zero() }).collect();

    // Group index of each bidder; bidders outside every group never leave.
    let mut group_of = vec![usize::MAX; n];
    for (g, members) in record.groups.iter().enumerate() {
        for &b in members {
            group_of[b] = g;
        }
    }
    // q⁽ⁱ⁾ for i = 1..=β+1 (0-based index i−1).
    let q_at = |i: usize| -> PriceVector {
        (0..m)
            .map(|l| match opt.allocation.owner(l) {
                Some(b) if o_star.contains(l) && group_of[b].saturating_add(1) >= i => q_star[l].clone(),
                _ => rational::zero(),
            })
            .collect()
    };
    let shared = |p: &Rational, qv: &Rational, level: usize| match (tree.strong_node(p, level), tree.containing_node(qv, level)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    };
    let slack = &opt.welfare / rational::int(10 * beta as i64);

    let mut iterations = Vec::with_capacity(beta + 1);
    let mut correct = ItemSet::full(m);
    for i in 1..=beta + 1 {
        let prices = record.learned_prices[i - 1].clone();
        let qi = q_at(i);
        correct = correct.iter().filter(|&l| shared(&prices[l], &qi[l], i)).collect();
        let correct_mass = qi.total(correct);
        let mut entry = TraceIteration {
            iteration: i,
            correct_mass,
            correct,
            parts: Vec::new(),
            welfares: Vec::new(),
            j_star: None,
            stop: false,
            overestimate: None,
            prices,
            q: qi,
        };
        if i <= beta {
            let it = &record.iterations[i - 1];
            let mut parts = vec![ItemSet::EMPTY; alpha];
            for l in correct.iter() {
                let z = tree.strong_node(&entry.prices[l], i).expect("correct items share a node");
                let child = tree.containing_node(&entry.q[l], i + 1).expect("q lies in the tree");
                parts[child.index - z.index * alpha] = parts[child.index - z.index * alpha].with(l);
            }
            let next = &record.learned_prices[i];
            let retained_set: ItemSet = correct.iter().filter(|&l| shared(&next[l], &entry.q[l], i + 1)).collect();
            let sold_in_own_part =
                parts.iter().zip(&it.allocations).map(|(d, a)| entry.q.total(d.intersection(a.allocated()))).sum();
            entry.overestimate = Some(OverestimateCheck { retained: entry.q.total(retained_set), sold_in_own_part, slack: slack.clone() });
            entry.welfares = it.allocations.iter().map(|a| welfare(a, valuations)).collect::<Result<_>>()?;
            entry.parts = parts;
            entry.j_star = Some(it.j_star);
            entry.stop = it.stop;
        } else {
            let last = record.final_auction.as_ref().expect("checked above");
            entry.welfares = vec![welfare(last, valuations)?];
        }
        iterations.push(entry);
    }
    Ok(AnalysisTrace { opt: opt.welfare.clone(), o_star, q_star, alpha, beta, iterations })
}

impl AnalysisTrace {
    /// Nestedness, the `D` partition, `p ≤ q` on correct items and the
    /// overestimate bound; the first failure is reported.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        let mut prev = self.o_star;
        for it in &self.iterations {
            let i = it.iteration;
            if !it.correct.is_subset(prev) {
                return fail(format!("C({i}) is not inside C({})", i - 1));
            }
            prev = it.correct;
            if let Some(l) = it.correct.iter().find(|&l| it.prices[l] > it.q[l]) {
                return fail(format!("item {l} in C({i}) has p > q"));
            }
            if !it.parts.is_empty() {
                let mut union = ItemSet::EMPTY;
                for d in &it.parts {
                    if !union.is_disjoint(*d) {
                        return fail(format!("parts of C({i}) overlap"));
                    }
                    union = union.union(*d);
                }
                if union != it.correct {
                    return fail(format!("parts do not cover C({i})"));
                }
            }
            if let Some(check) = &it.overestimate {
                if !check.holds() {
                    return fail(format!(
                        "iteration {i}: retained mass {} below {} - {}",
                        rational::format(&check.retained),
                        rational::format(&check.sold_in_own_part),
                        rational::format(&check.slack)
                    ));
                }
            }
        }
        if self.iterations.first().map(|it| it.correct) != Some(self.o_star) {
            return fail("C(1) differs from O*".into());
        }
        Ok(())
    }
}

/// Mean with a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Estimate {
    pub fn of(samples: &[f64]) -> Estimate {
        let k = samples.len() as f64;
        if samples.is_empty() {
            return Estimate { mean: f64::NAN, low: f64::NAN, high: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / k;
        let var = if samples.len() > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let half = 1.96 * (var / k).sqrt();
        Estimate { mean, low: mean - half, high: mean + half }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchCheck {
    pub iteration: usize,
    /// `q⁽ⁱ⁺¹⁾(C⁽ⁱ⁺¹⁾) − q⁽ⁱ⁾(C⁽ⁱ⁾)` against `−opt/(3β)`.
    pub learn_gain: Estimate,
    pub learn_threshold: f64,
    /// `V(A⁽ⁱ⁾_{j*})` against `opt/(200αβ²)`.
    pub selected_welfare: Estimate,
    pub allocate_threshold: f64,
    pub learnable: bool,
    pub allocatable: bool,
    /// Neither branch can be ruled out at 95%.
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub seeds: usize,
    pub iterations: Vec<BranchCheck>,
    pub warning: Option<String>,
}

/// Monte Carlo view of the learnable-or-allocatable dichotomy over traces of
/// one instance. Reports rather than asserts.
pub fn check_lemma_branches(traces: &[AnalysisTrace], opt: &Rational, alpha: usize, beta: usize, min_seeds: usize) -> BranchReport {
    let warning = (traces.len() < min_seeds)
        .then(|| format!("only {} traces, fewer than the {min_seeds} needed for reliable estimates", traces.len()));
    let opt_f = rational::to_f64(opt);
    let learn_threshold = -opt_f / (3.0 * beta as f64);
    let allocate_threshold = opt_f / (200.0 * alpha as f64 * (beta * beta) as f64);
    let iterations = (1..=beta)
        .map(|i| {
            let usable: Vec<&AnalysisTrace> = traces.iter().filter(|t| t.iterations.len() > i).collect();
            let gains: Vec<f64> = usable
                .iter()
                .map(|t| rational::to_f64(&(&t.iterations[i].correct_mass - &t.iterations[i - 1].correct_mass)))
                .collect();
            let selected: Vec<f64> = usable
                .iter()
                .map(|t| {
                    let it = &t.iterations[i - 1];
                    it.j_star.map_or(0.0, |j| rational::to_f64(&it.welfares[j]))
                })
                .collect();
            let learn_gain = Estimate::of(&gains);
            let selected_welfare = Estimate::of(&selected);
            let learnable = learn_gain.mean >= learn_threshold - 1e-9 * opt_f.max(1.0);
            let allocatable = selected_welfare.mean >= allocate_threshold - 1e-9 * opt_f.max(1.0);
            let consistent = opt.is_zero() || learn_gain.high >= learn_threshold || selected_welfare.high >= allocate_threshold;
            BranchCheck {
                iteration: i,
                learn_gain,
                learn_threshold,
                selected_welfare,
                allocate_threshold,
                learnable: learnable || opt.is_zero(),
                allocatable: allocatable || opt.is_zero(),
                consistent,
            }
        })
        .collect();
    BranchReport { seeds: traces.len(), iterations, warning }
}
