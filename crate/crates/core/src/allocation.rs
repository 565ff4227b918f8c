use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::rational::{self, Rational};
use crate::valuation::Valuation;

/// Per-bidder bundles and payments, indexed by bidder id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    bundles: Vec<ItemSet>,
    #[serde(with = "rational::serde_decimal::vec")]
    payments: Vec<Rational>,
}

impl Allocation {
    /// Nobody gets anything, nobody pays.
    pub fn empty(n: usize) -> Self {
        Allocation { bundles: vec![ItemSet::EMPTY; n], payments: vec![Rational::zero(); n] }
    }

    pub fn new(bundles: Vec<ItemSet>, payments: Vec<Rational>) -> Result<Self> {
        if bundles.len() != payments.len() {
            return Err(Error::Shape("bundles and payments differ in length".into()));
        }
        if payments.iter().any(|p| p.is_negative()) {
            return Err(Error::Invariant("negative payment".into()));
        }
        let a = Allocation { bundles, payments };
        a.check_disjoint()?;
        Ok(a)
    }

    pub fn bidders(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, bidder: usize) -> ItemSet {
        self.bundles[bidder]
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.bundles
    }

    pub fn payment(&self, bidder: usize) -> &Rational {
        &self.payments[bidder]
    }

    pub fn payments(&self) -> &[Rational] {
        &self.payments
    }

    pub fn total_payments(&self) -> Rational {
        self.payments.iter().sum()
    }

    /// Union of all bundles.
    pub fn allocated(&self) -> ItemSet {
        self.bundles.iter().fold(ItemSet::EMPTY, |acc, &b| acc.union(b))
    }

    /// The bidder holding `item`, if any.
    pub fn owner(&self, item: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(item))
    }

    pub(crate) fn assign(&mut self, bidder: usize, bundle: ItemSet, payment: Rational) {
        self.bundles[bidder] = bundle;
        self.payments[bidder] = payment;
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = ItemSet::EMPTY;
        for (i, &b) in self.bundles.iter().enumerate() {
            if !seen.is_disjoint(b) {
                return Err(Error::Invariant(format!("bundle of bidder {i} overlaps an earlier bundle")));
            }
            seen = seen.union(b);
        }
        Ok(())
    }
}

/// Social welfare `Σ_i v_i(A_i)`.
pub fn welfare(allocation: &Allocation, valuations: &[Valuation]) -> Result<Rational> {
    if allocation.bidders() != valuations.len() {
        return Err(Error::Shape(format!(
            "allocation covers {} bidders, {} valuations given",
            allocation.bidders(),
            valuations.len()
        )));
    }
    allocation.check_disjoint()?;
    allocation
        .bundles
        .iter()
        .zip(valuations)
        .map(|(&b, v)| v.value_query(b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::valuation::XosValuation;

    #[test]
    fn empty_allocation_has_zero_welfare() {
        assert_eq!(welfare(&Allocation::empty(0), &[]).unwrap(), int(0));
        let v = vec![Valuation::from(XosValuation::additive(vec![int(5), int(7)]).unwrap())];
        assert_eq!(welfare(&Allocation::empty(1), &v).unwrap(), int(0));
    }

    #[test]
    fn full_bundle_single_bidder() {
        let v = vec![Valuation::from(XosValuation::additive(vec![int(5), int(7)]).unwrap())];
        let a = Allocation::new(vec![ItemSet::full(2)], vec![int(0)]).unwrap();
        assert_eq!(welfare(&a, &v).unwrap(), int(12));
    }

    #[test]
    fn overlapping_bundles_rejected() {
        let err = Allocation::new(vec![ItemSet::single(0), ItemSet::from_items([0, 1])], vec![int(0), int(0)]);
        assert!(matches!(err, Err(Error::Invariant(_))));
        let mut a = Allocation::empty(2);
        a.assign(0, ItemSet::single(1), int(0));
        a.assign(1, ItemSet::single(1), int(0));
        let v = vec![Valuation::zero(2), Valuation::zero(2)];
        assert!(matches!(welfare(&a, &v), Err(Error::Invariant(_))));
    }
}
