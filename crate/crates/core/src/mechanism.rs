//! The price-learning mechanism and the final mechanism that wraps it.

use num_traits::Zero;
use serde::Serialize;

use crate::allocation::{welfare, Allocation};
use crate::auction::{Market, QueryCounts};
use crate::coins::CoinTape;
use crate::demand::DemandOracle;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::price::PriceVector;
use crate::price_tree::{solve_parameters, ModifiedPriceTree, Params, Parity};
use crate::rational::{self, Rational};
use crate::valuation::Valuation;

/// Auctions per learning iteration.
pub const ALPHA: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    SecondPrice,
    /// The stop coin fired after `iteration` (1-based); auction `j_star`
    /// (0-based) of that iteration was returned.
    LearningStopped { iteration: usize, j_star: usize },
    LearningCompleted,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::SecondPrice => "second_price",
            Branch::LearningStopped { .. } => "learning_stopped",
            Branch::LearningCompleted => "learning_completed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// The `α` canonical level-`(i+1)` vectors `p⁽ⁱ⁾_1..p⁽ⁱ⁾_α` (full prices;
    /// the auctions post half of them).
    pub canonical: Vec<PriceVector>,
    /// `A⁽ⁱ⁾_1..A⁽ⁱ⁾_α`.
    pub allocations: Vec<Allocation>,
    pub stop: bool,
    pub j_star: usize,
}

/// Everything the learning phase computed, in order.
#[derive(Clone, Debug)]
pub struct LearningRecord {
    pub params: Params,
    pub parity: Parity,
    /// `N_1..N_{β+1}`, each in auction order.
    pub groups: Vec<Vec<usize>>,
    /// `p⁽¹⁾, p⁽²⁾, ...` up to the last vector computed.
    pub learned_prices: Vec<PriceVector>,
    pub iterations: Vec<IterationRecord>,
    /// The auction on `N_{β+1}` at `p⁽ᵝ⁺¹⁾/2`, if reached.
    pub final_auction: Option<Allocation>,
}

impl LearningRecord {
    pub fn tree(&self) -> Result<ModifiedPriceTree> {
        ModifiedPriceTree::from_params(&self.params, self.parity)
    }
}

#[derive(Clone, Debug)]
pub struct StatRecord {
    pub stat_group: Vec<usize>,
    pub mech_group: Vec<usize>,
    pub a_stat: Rational,
    pub psi_min: Rational,
    pub psi_max: Rational,
}

#[derive(Clone, Debug)]
pub struct MechanismOutcome {
    pub allocation: Allocation,
    /// Welfare of `allocation` under the reported valuations.
    pub welfare: Rational,
    pub branch: Branch,
    pub queries: Vec<QueryCounts>,
    pub learning: Option<LearningRecord>,
    pub stat: Option<StatRecord>,
}

impl MechanismOutcome {
    pub fn total_demand_queries(&self) -> usize {
        self.queries.iter().map(|q| q.demand).sum()
    }

    pub fn total_value_queries(&self) -> usize {
        self.queries.iter().map(|q| q.value).sum()
    }
}

/// Splits `bidders` into `β+1` groups: in each of `β` rounds the remaining
/// bidders are shuffled and the first `⌊|N'|/(10β)⌋` form the next group; the
/// rest, in shuffled order, are the last group.
pub fn partition_bidders(bidders: &[usize], beta: usize, tape: &CoinTape) -> Result<Vec<Vec<usize>>> {
    if beta < 1 {
        return Err(Error::Domain("beta must be at least 1".into()));
    }
    let mut coins = tape.partition_rng();
    let mut rest = bidders.to_vec();
    let mut groups = Vec::with_capacity(beta + 1);
    for _ in 0..beta {
        coins.shuffle(&mut rest);
        let take = rest.len() / (10 * beta);
        groups.push(rest.drain(..take).collect());
    }
    groups.push(rest);
    Ok(groups)
}

/// Item `j` takes its price from the highest-index auction that sold it, or
/// from the first vector when no auction did.
pub fn price_update(allocations: &[Allocation], vectors: &[PriceVector]) -> Result<PriceVector> {
    if allocations.len() != vectors.len() || vectors.is_empty() {
        return Err(Error::Invariant(format!(
            "price update needs matching nonempty lists, got {} allocations and {} vectors",
            allocations.len(),
            vectors.len()
        )));
    }
    let m = vectors[0].len();
    if vectors.iter().any(|v| v.len() != m) {
        return Err(Error::Invariant("price vectors differ in length".into()));
    }
    let sold: Vec<ItemSet> = allocations.iter().map(Allocation::allocated).collect();
    Ok((0..m)
        .map(|j| {
            let k = sold.iter().rposition(|s| s.contains(j)).unwrap_or(0);
            vectors[k][j].clone()
        })
        .collect())
}

/// Runs every learning iteration regardless of the stop coins. The stop coins
/// never influence prices, so a real run's history is a prefix of this one.
fn learning_path(
    market: &mut Market<'_>,
    participants: &[usize],
    psi_min: Rational,
    psi_max: Rational,
    tape: &CoinTape,
    stop_early: bool,
) -> Result<LearningRecord> {
    let params = solve_parameters(psi_min, psi_max, ALPHA)?;
    let groups = partition_bidders(participants, params.beta, tape)?;
    let parity = tape.parity();
    let tree = ModifiedPriceTree::from_params(&params, parity)?;
    let coins = tape.iteration_coins(params.beta, params.alpha);
    let everything = ItemSet::full(market.items());

    let mut prices = tree.root_vector(market.items());
    let mut record = LearningRecord {
        params: params.clone(),
        parity,
        groups,
        learned_prices: vec![prices.clone()],
        iterations: Vec::with_capacity(params.beta),
        final_auction: None,
    };
    for (i, &(stop, j_star)) in coins.iter().enumerate() {
        let canonical = tree.canonical_vectors(&prices, i + 1)?;
        let allocations = canonical
            .iter()
            .map(|p| market.fixed_price_auction(&record.groups[i], everything, &p.halved()))
            .collect::<Result<Vec<_>>>()?;
        record.iterations.push(IterationRecord { canonical, allocations, stop, j_star });
        if stop && stop_early {
            return Ok(record);
        }
        let last = record.iterations.last().expect("just pushed");
        prices = price_update(&last.allocations, &last.canonical)?;
        record.learned_prices.push(prices.clone());
    }
    let last_group = record.groups[params.beta].clone();
    record.final_auction = Some(market.fixed_price_auction(&last_group, everything, &prices.halved())?);
    Ok(record)
}

fn learning_outcome(record: LearningRecord) -> (Allocation, Branch, LearningRecord) {
    match record.iterations.iter().position(|it| it.stop) {
        Some(i) => {
            let it = &record.iterations[i];
            let allocation = it.allocations[it.j_star].clone();
            let branch = Branch::LearningStopped { iteration: i + 1, j_star: it.j_star };
            (allocation, branch, record)
        }
        None => {
            let allocation = record.final_auction.clone().expect("completed run has a final auction");
            (allocation, Branch::LearningCompleted, record)
        }
    }
}

/// The price-learning mechanism over `participants` with known price range.
pub fn price_learning_mechanism(
    valuations: &[Valuation],
    participants: &[usize],
    m: usize,
    psi_min: Rational,
    psi_max: Rational,
    tape: &CoinTape,
    oracle: &DemandOracle,
) -> Result<MechanismOutcome> {
    let mut market = Market::new(valuations, m, oracle)?;
    let record = learning_path(&mut market, participants, psi_min, psi_max, tape, true)?;
    let (allocation, branch, record) = learning_outcome(record);
    Ok(MechanismOutcome {
        welfare: welfare(&allocation, valuations)?,
        allocation,
        branch,
        queries: market.into_queries(),
        learning: Some(record),
        stat: None,
    })
}

/// Like [`price_learning_mechanism`] but keeps iterating past a fired stop
/// coin, recording all `β` iterations and the final auction. Used by the
/// analysis trace; the returned record's prefix matches a real run's.
pub fn full_learning_path(
    valuations: &[Valuation],
    participants: &[usize],
    m: usize,
    psi_min: Rational,
    psi_max: Rational,
    tape: &CoinTape,
    oracle: &DemandOracle,
) -> Result<LearningRecord> {
    let mut market = Market::new(valuations, m, oracle)?;
    learning_path(&mut market, participants, psi_min, psi_max, tape, false)
}

/// With probability 1/2 a second-price sale of the grand bundle; otherwise a
/// random half of the bidders estimates the price range through the greedy
/// allocation and the other half runs the price-learning mechanism.
pub fn final_mechanism(valuations: &[Valuation], m: usize, tape: &CoinTape, oracle: &DemandOracle) -> Result<MechanismOutcome> {
    let n = valuations.len();
    if n == 0 || m == 0 {
        return Err(Error::Domain(format!("final mechanism needs n >= 1 and m >= 1, got n={n}, m={m}")));
    }
    let mut market = Market::new(valuations, m, oracle)?;
    let everything = ItemSet::full(m);
    if tape.second_price_branch() {
        let everyone: Vec<usize> = (0..n).collect();
        let allocation = market.second_price_grand_bundle(&everyone, everything)?;
        return Ok(MechanismOutcome {
            welfare: welfare(&allocation, valuations)?,
            allocation,
            branch: Branch::SecondPrice,
            queries: market.into_queries(),
            learning: None,
            stat: None,
        });
    }

    let coins = tape.stat_sample(n);
    let (stat_group, mech_group): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| coins[i]);
    let greedy = market.greedy(&stat_group, everything)?;
    let a_stat = welfare(&greedy, valuations)?;
    let (psi_min, psi_max) = if a_stat.is_zero() {
        (rational::int(1), rational::int(1))
    } else {
        (&a_stat / rational::int((m * m) as i64), &a_stat * rational::int(8))
    };

    let record = learning_path(&mut market, &mech_group, psi_min.clone(), psi_max.clone(), tape, true)?;
    let (allocation, branch, record) = learning_outcome(record);
    Ok(MechanismOutcome {
        welfare: welfare(&allocation, valuations)?,
        allocation,
        branch,
        queries: market.into_queries(),
        learning: Some(record),
        stat: Some(StatRecord { stat_group, mech_group, a_stat, psi_min, psi_max }),
    })
}

/// `v(A_i) − payment_i` under the bidder's true valuation.
pub fn bidder_utility(outcome: &MechanismOutcome, bidder: usize, truth: &Valuation) -> Result<Rational> {
    if bidder >= outcome.allocation.bidders() {
        return Err(Error::Domain(format!("bidder {bidder} did not take part")));
    }
    Ok(truth.value_query(outcome.allocation.bundle(bidder))? - outcome.allocation.payment(bidder))
}
