//! Auction primitives: posted-price sequential sale, second-price sale of the
//! grand bundle, and the greedy welfare estimate.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::allocation::Allocation;
use crate::demand::DemandOracle;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::price::PriceVector;
use crate::rational::Rational;
use crate::valuation::Valuation;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryCounts {
    pub demand: usize,
    pub value: usize,
}

/// Bidders' reported valuations plus the query accounting for one run.
/// Bidder ids index into `valuations`.
#[derive(Debug)]
pub struct Market<'a> {
    valuations: &'a [Valuation],
    m: usize,
    oracle: &'a DemandOracle,
    queries: Vec<QueryCounts>,
}

impl<'a> Market<'a> {
    pub fn new(valuations: &'a [Valuation], m: usize, oracle: &'a DemandOracle) -> Result<Self> {
        if let Some(i) = valuations.iter().position(|v| v.item_count() != m) {
            return Err(Error::Shape(format!("bidder {i} values {} items, expected {m}", valuations[i].item_count())));
        }
        Ok(Market { valuations, m, oracle, queries: vec![QueryCounts::default(); valuations.len()] })
    }

    pub fn bidders(&self) -> usize {
        self.valuations.len()
    }

    pub fn items(&self) -> usize {
        self.m
    }

    pub fn valuations(&self) -> &'a [Valuation] {
        self.valuations
    }

    pub fn queries(&self) -> &[QueryCounts] {
        &self.queries
    }

    pub fn into_queries(self) -> Vec<QueryCounts> {
        self.queries
    }

    fn check_bidder(&self, id: usize) -> Result<()> {
        if id >= self.valuations.len() {
            return Err(Error::Shape(format!("unknown bidder {id}")));
        }
        Ok(())
    }

    fn value(&mut self, id: usize, set: ItemSet) -> Rational {
        self.queries[id].value += 1;
        self.valuations[id].value(set)
    }

    fn demand(&mut self, id: usize, prices: &PriceVector, available: ItemSet) -> Result<ItemSet> {
        self.queries[id].demand += 1;
        self.oracle.demand_within(&self.valuations[id], prices, available)
    }

    /// Bidders in `order` each take their demanded bundle from the items still
    /// unsold and pay its posted price.
    pub fn fixed_price_auction(&mut self, order: &[usize], items: ItemSet, prices: &PriceVector) -> Result<Allocation> {
        items.check_within(self.m)?;
        prices.check_len(self.m)?;
        let mut allocation = Allocation::empty(self.valuations.len());
        let mut remaining = items;
        for &id in order {
            self.check_bidder(id)?;
            if !allocation.bundle(id).is_empty() {
                return Err(Error::Domain(format!("bidder {id} appears twice in the auction order")));
            }
            let bundle = self.demand(id, prices, remaining)?;
            remaining = remaining.difference(bundle);
            allocation.assign(id, bundle, prices.total(bundle));
        }
        Ok(allocation)
    }

    /// The highest grand-bundle value wins everything and pays the runner-up's
    /// value; ties go to the lowest id.
    pub fn second_price_grand_bundle(&mut self, participants: &[usize], items: ItemSet) -> Result<Allocation> {
        items.check_within(self.m)?;
        if participants.is_empty() {
            return Err(Error::Domain("second-price auction needs at least one bidder".into()));
        }
        let mut bids: Vec<(usize, Rational)> = Vec::with_capacity(participants.len());
        for &id in participants {
            self.check_bidder(id)?;
            let bid = self.value(id, items);
            bids.push((id, bid));
        }
        // Highest bid first, lowest id among equals.
        bids.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let (winner, _) = bids[0].clone();
        let price = bids.get(1).map(|b| b.1.clone()).unwrap_or_else(Rational::zero);
        let mut allocation = Allocation::empty(self.valuations.len());
        allocation.assign(winner, items, price);
        Ok(allocation)
    }

    /// Items in increasing index go to the participant with the largest
    /// marginal value (lowest id on ties); items nobody values at the margin
    /// stay unassigned. No payments.
    pub fn greedy(&mut self, participants: &[usize], items: ItemSet) -> Result<Allocation> {
        items.check_within(self.m)?;
        for &id in participants {
            self.check_bidder(id)?;
        }
        let mut allocation = Allocation::empty(self.valuations.len());
        let mut current: Vec<Rational> = vec![Rational::zero(); self.valuations.len()];
        for j in items.iter() {
            let mut best: Option<(usize, Rational, Rational)> = None;
            for &id in participants {
                let with = self.value(id, allocation.bundle(id).with(j));
                let marginal = &with - &current[id];
                let better = match &best {
                    None => true,
                    Some((bid, bm, _)) => marginal > *bm || (marginal == *bm && id < *bid),
                };
                if better {
                    best = Some((id, marginal, with));
                }
            }
            if let Some((id, marginal, with)) = best {
                if marginal.is_positive() {
                    allocation.assign(id, allocation.bundle(id).with(j), Rational::zero());
                    current[id] = with;
                }
            }
        }
        Ok(allocation)
    }
}
