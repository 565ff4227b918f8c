//! Valuation representations and the value / supporting-price queries.
//!
//! A query's cost is linear in the clause count; clause lists are accepted at
//! any length.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::items::{ItemSet, MAX_ITEMS};
use crate::rational::Rational;

/// An additive valuation `a(S) = Σ_{j∈S} a({j})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveClause {
    item_values: Vec<Rational>,
}

impl AdditiveClause {
    pub fn new(item_values: Vec<Rational>) -> Result<Self> {
        check_values(&item_values)?;
        Ok(AdditiveClause { item_values })
    }

    pub fn item_values(&self) -> &[Rational] {
        &self.item_values
    }

    pub fn value(&self, set: ItemSet) -> Rational {
        set.iter().map(|j| &self.item_values[j]).sum()
    }
}

/// Pointwise maximum of additive clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XosValuation {
    clauses: Vec<AdditiveClause>,
}

impl XosValuation {
    pub fn new(clauses: Vec<AdditiveClause>) -> Result<Self> {
        let Some(first) = clauses.first() else {
            return Err(Error::Domain("an XOS valuation needs at least one clause".into()));
        };
        let m = first.item_values.len();
        if clauses.iter().any(|c| c.item_values.len() != m) {
            return Err(Error::Shape("XOS clauses have differing lengths".into()));
        }
        Ok(XosValuation { clauses })
    }

    /// Convenience constructor from raw clause rows.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        XosValuation::new(rows.into_iter().map(AdditiveClause::new).collect::<Result<_>>()?)
    }

    pub fn additive(values: Vec<Rational>) -> Result<Self> {
        XosValuation::from_rows(vec![values])
    }

    pub fn clauses(&self) -> &[AdditiveClause] {
        &self.clauses
    }

    pub fn item_count(&self) -> usize {
        self.clauses[0].item_values.len()
    }

    /// Lowest-index clause attaining `max_r a_r(S)`, with that maximum.
    pub fn maximizing_clause(&self, set: ItemSet) -> (usize, Rational) {
        let mut best = (0, self.clauses[0].value(set));
        for (r, clause) in self.clauses.iter().enumerate().skip(1) {
            let v = clause.value(set);
            if v > best.1 {
                best = (r, v);
            }
        }
        best
    }

    pub fn value(&self, set: ItemSet) -> Rational {
        self.maximizing_clause(set).1
    }

    /// `a({j})` for `j ∈ S`, where `a` is the lowest-index maximizing clause of `S`.
    pub fn supporting_prices(&self, set: ItemSet) -> Result<BTreeMap<usize, Rational>> {
        set.check_within(self.item_count())?;
        let (r, _) = self.maximizing_clause(set);
        Ok(set.iter().map(|j| (j, self.clauses[r].item_values[j].clone())).collect())
    }
}

/// `v(S) = min(b, Σ_{j∈S} v({j}))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BudgetAdditiveValuation {
    item_values: Vec<Rational>,
    budget: Rational,
}

impl BudgetAdditiveValuation {
    pub fn new(item_values: Vec<Rational>, budget: Rational) -> Result<Self> {
        check_values(&item_values)?;
        if budget.is_negative() {
            return Err(Error::Domain("budget must be nonnegative".into()));
        }
        Ok(BudgetAdditiveValuation { item_values, budget })
    }

    pub fn item_values(&self) -> &[Rational] {
        &self.item_values
    }

    pub fn budget(&self) -> &Rational {
        &self.budget
    }

    pub fn item_count(&self) -> usize {
        self.item_values.len()
    }

    pub fn value(&self, set: ItemSet) -> Rational {
        let sum: Rational = set.iter().map(|j| &self.item_values[j]).sum();
        sum.min(self.budget.clone())
    }

    /// A clause supporting `S`: item values, scaled down proportionally onto
    /// the budget when the bundle's raw sum exceeds it.
    pub fn bundle_clause(&self, set: ItemSet) -> BTreeMap<usize, Rational> {
        let sum: Rational = set.iter().map(|j| &self.item_values[j]).sum();
        let over = sum > self.budget;
        set.iter()
            .map(|j| {
                let v = &self.item_values[j];
                let s = if over { v * &self.budget / &sum } else { v.clone() };
                (j, s)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Xos(XosValuation),
    BudgetAdditive(BudgetAdditiveValuation),
}

impl Valuation {
    pub fn item_count(&self) -> usize {
        match self {
            Valuation::Xos(v) => v.item_count(),
            Valuation::BudgetAdditive(v) => v.item_count(),
        }
    }

    /// `v(S)`; fails when `S` names an item outside `0..m`.
    pub fn value_query(&self, set: ItemSet) -> Result<Rational> {
        set.check_within(self.item_count())?;
        Ok(self.value(set))
    }

    /// `v(S)` without the shape check.
    pub fn value(&self, set: ItemSet) -> Rational {
        match self {
            Valuation::Xos(v) => v.value(set),
            Valuation::BudgetAdditive(v) => v.value(set),
        }
    }

    /// Supporting prices from the explicit clause list. Budget-additive
    /// valuations keep no explicit clauses and are rejected.
    pub fn supporting_prices(&self, set: ItemSet) -> Result<BTreeMap<usize, Rational>> {
        match self {
            Valuation::Xos(v) => v.supporting_prices(set),
            Valuation::BudgetAdditive(_) => Err(Error::Capability(
                "supporting prices need an explicit clause list; budget-additive valuations have none".into(),
            )),
        }
    }

    /// Supporting prices for a single bundle, for either variant: the XOS
    /// maximizing clause, or the budget-scaled clause of
    /// [`BudgetAdditiveValuation::bundle_clause`].
    pub fn bundle_supporting_prices(&self, set: ItemSet) -> Result<BTreeMap<usize, Rational>> {
        match self {
            Valuation::Xos(v) => v.supporting_prices(set),
            Valuation::BudgetAdditive(v) => {
                set.check_within(v.item_count())?;
                Ok(v.bundle_clause(set))
            }
        }
    }

    /// The all-zero valuation over `m` items.
    pub fn zero(m: usize) -> Self {
        Valuation::Xos(XosValuation::additive(vec![Rational::zero(); m]).expect("zero clause is valid"))
    }
}

impl From<XosValuation> for Valuation {
    fn from(v: XosValuation) -> Self {
        Valuation::Xos(v)
    }
}

impl From<BudgetAdditiveValuation> for Valuation {
    fn from(v: BudgetAdditiveValuation) -> Self {
        Valuation::BudgetAdditive(v)
    }
}

fn check_values(values: &[Rational]) -> Result<()> {
    if values.len() > MAX_ITEMS {
        return Err(Error::Shape(format!("{} items exceeds the limit of {MAX_ITEMS}", values.len())));
    }
    if let Some(j) = values.iter().position(|v| v.is_negative()) {
        return Err(Error::Domain(format!("value of item {j} is negative")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn xos(rows: &[&[i64]]) -> XosValuation {
        XosValuation::from_rows(rows.iter().map(|r| ints(r)).collect()).unwrap()
    }

    #[test]
    fn xos_value_takes_best_clause() {
        let v = Valuation::from(xos(&[&[1, 2], &[2, 0]]));
        assert_eq!(v.value_query(ItemSet::from_items([0, 1])).unwrap(), int(3));
        assert_eq!(v.value_query(ItemSet::from_items([0])).unwrap(), int(2));
        assert_eq!(v.value_query(ItemSet::EMPTY).unwrap(), int(0));
    }

    #[test]
    fn budget_additive_caps_at_budget() {
        let v = Valuation::from(BudgetAdditiveValuation::new(ints(&[2, 2]), int(3)).unwrap());
        assert_eq!(v.value_query(ItemSet::from_items([0, 1])).unwrap(), int(3));
        assert_eq!(v.value_query(ItemSet::from_items([1])).unwrap(), int(2));
        assert_eq!(v.value_query(ItemSet::EMPTY).unwrap(), int(0));
    }

    #[test]
    fn out_of_range_item_is_a_shape_error() {
        let v = Valuation::from(xos(&[&[1, 2]]));
        assert!(matches!(v.value_query(ItemSet::single(2)), Err(Error::Shape(_))));
    }

    #[test]
    fn empty_clause_list_rejected() {
        assert!(matches!(XosValuation::new(vec![]), Err(Error::Domain(_))));
        assert!(XosValuation::from_rows(vec![ints(&[1]), ints(&[1, 2])]).is_err());
        assert!(AdditiveClause::new(vec![int(-1)]).is_err());
    }

    #[test]
    fn supporting_prices_from_maximizing_clause() {
        let v = Valuation::from(xos(&[&[1, 2], &[2, 0]]));
        let s = v.supporting_prices(ItemSet::from_items([0, 1])).unwrap();
        assert_eq!(s, BTreeMap::from([(0, int(1)), (1, int(2))]));
        assert!(v.supporting_prices(ItemSet::EMPTY).unwrap().is_empty());

        let single = Valuation::from(xos(&[&[5, 7]]));
        assert_eq!(single.supporting_prices(ItemSet::single(1)).unwrap(), BTreeMap::from([(1, int(7))]));
    }

    #[test]
    fn supporting_prices_tie_uses_lowest_clause() {
        let v = xos(&[&[1, 3], &[3, 1]]);
        let s = v.supporting_prices(ItemSet::from_items([0, 1])).unwrap();
        assert_eq!(s[&0], int(1));
    }

    #[test]
    fn budget_additive_has_no_explicit_clauses() {
        let v = Valuation::from(BudgetAdditiveValuation::new(ints(&[2, 2]), int(3)).unwrap());
        assert!(matches!(v.supporting_prices(ItemSet::single(0)), Err(Error::Capability(_))));
        let s = v.bundle_supporting_prices(ItemSet::from_items([0, 1])).unwrap();
        assert_eq!(s[&0], ratio(3, 2));
        assert_eq!(s[&1], ratio(3, 2));
        let s = v.bundle_supporting_prices(ItemSet::single(0)).unwrap();
        assert_eq!(s[&0], int(2));
    }
}
