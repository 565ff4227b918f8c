//! Exact optimal welfare for desk-scale instances.
//!
//! The optimum is found by a subset DP over bidders (`3^m` per bidder) on
//! integer-scaled value tables, which visits the same solution space as
//! enumerating all `(n+1)^m` item assignments. Among optimal allocations the
//! one with the lexicographically smallest assignment vector is returned,
//! where item `j` maps to "unassigned" (ordered first) or a bidder index.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::allocation::{welfare, Allocation};
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::price::PriceVector;
use crate::rational::Rational;
use crate::scaled::{common_scale, narrow, Acc};
use crate::valuation::Valuation;

pub const DEFAULT_ASSIGNMENT_CAP: u128 = 100_000_000;
/// Value tables hold `2^m` entries per bidder.
pub const MAX_ORACLE_ITEMS: usize = 20;

#[derive(Clone, Debug)]
pub struct OptimalSolution {
    pub allocation: Allocation,
    pub welfare: Rational,
    /// Supporting price of each allocated item in its owner's maximizing
    /// clause; zero for unallocated items.
    pub supporting_prices: PriceVector,
}

pub fn brute_force_opt(valuations: &[Valuation], m: usize) -> Result<OptimalSolution> {
    brute_force_opt_capped(valuations, m, DEFAULT_ASSIGNMENT_CAP)
}

pub fn brute_force_opt_capped(valuations: &[Valuation], m: usize, cap: u128) -> Result<OptimalSolution> {
    let n = valuations.len();
    if let Some(i) = valuations.iter().position(|v| v.item_count() != m) {
        return Err(Error::Shape(format!("bidder {i} values {} items, expected {m}", valuations[i].item_count())));
    }
    let assignments = (n as u128 + 1).checked_pow(m as u32);
    if assignments.is_none_or(|a| a > cap) {
        return Err(Error::Capability(format!("(n+1)^m = {}^{m} assignments exceeds the oracle cap of {cap}", n + 1)));
    }
    if m > MAX_ORACLE_ITEMS {
        return Err(Error::Capability(format!("{m} items exceeds the oracle table limit of {MAX_ORACLE_ITEMS}")));
    }

    let table: Vec<Rational> = (0..n)
        .flat_map(|i| (0u64..1 << m).map(move |mask| valuations[i].value(ItemSet::from_bits(mask))))
        .collect();
    let scaled = common_scale(&table.iter().collect::<Vec<_>>());
    let owners = match narrow(&scaled, n + 1) {
        Some(ints) => lex_first_optimum(&ints, n, m),
        None => lex_first_optimum::<BigInt>(&scaled, n, m),
    };

    let mut bundles = vec![ItemSet::EMPTY; n];
    for (j, owner) in owners.iter().enumerate() {
        if let Some(i) = owner {
            bundles[*i] = bundles[*i].with(j);
        }
    }
    let allocation = Allocation::new(bundles, vec![Rational::zero(); n])?;
    let total = welfare(&allocation, valuations)?;

    let mut q = vec![Rational::zero(); m];
    for (i, v) in valuations.iter().enumerate() {
        for (j, s) in v.bundle_supporting_prices(allocation.bundle(i))? {
            q[j] = s;
        }
    }
    Ok(OptimalSolution { allocation, welfare: total, supporting_prices: PriceVector::new(q)? })
}

/// Owner of each item in the lexicographically first optimal assignment.
fn lex_first_optimum<T: Acc>(table: &[T], n: usize, m: usize) -> Vec<Option<usize>> {
    let value = |i: usize, set: u64| &table[(i << m) | set as usize];
    let mut fixed = vec![0u64; n];
    let all = if m == 0 { 0 } else { u64::MAX >> (64 - m) };
    let opt = best_completion(&value, &fixed, all, n);

    let mut owners = Vec::with_capacity(m);
    for j in 0..m {
        let free = all & !((1u64 << (j + 1)) - 1);
        let choice = std::iter::once(None).chain((0..n).map(Some)).find(|&choice| {
            if let Some(i) = choice {
                fixed[i] |= 1 << j;
            }
            let ok = best_completion(&value, &fixed, free, n) == opt;
            if !ok {
                if let Some(i) = choice {
                    fixed[i] &= !(1 << j);
                }
            }
            ok
        });
        owners.push(choice.expect("some choice extends an optimal assignment"));
    }
    owners
}

/// Best welfare when bidder `i` holds `fixed[i]` plus a share of `free`.
fn best_completion<'a, T: Acc + 'a>(value: &impl Fn(usize, u64) -> &'a T, fixed: &[u64], free: u64, n: usize) -> T {
    // best[mask] over submasks of `free`, bidder by bidder.
    let subs: Vec<u64> = ItemSet::from_bits(free).subsets().map(ItemSet::bits).collect();
    let index = |mask: u64| subs.binary_search(&mask).expect("submask of free");
    let mut best: Vec<T> = vec![T::zero(); subs.len()];
    for (i, &own) in fixed.iter().enumerate().take(n) {
        let mut next: Vec<T> = Vec::with_capacity(subs.len());
        for &mask in &subs {
            let mut top: Option<T> = None;
            for s in ItemSet::from_bits(mask).subsets() {
                let mut cand = best[index(mask & !s.bits())].clone();
                cand += value(i, own | s.bits());
                if top.as_ref().is_none_or(|t| cand > *t) {
                    top = Some(cand);
                }
            }
            next.push(top.expect("empty subset always present"));
        }
        best = next;
    }
    best.pop().expect("free itself is the largest submask")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::valuation::{BudgetAdditiveValuation, XosValuation};

    fn additive(v: &[i64]) -> Valuation {
        Valuation::from(XosValuation::additive(v.iter().map(|&x| int(x)).collect()).unwrap())
    }

    #[test]
    fn single_bidder_takes_everything() {
        let sol = brute_force_opt(&[additive(&[5, 7])], 2).unwrap();
        assert_eq!(sol.allocation.bundle(0), ItemSet::full(2));
        assert_eq!(sol.welfare, int(12));
        assert_eq!(sol.supporting_prices.as_slice(), &[int(5), int(7)]);
    }

    #[test]
    fn two_additive_bidders_split() {
        let sol = brute_force_opt(&[additive(&[3, 0]), additive(&[0, 5])], 2).unwrap();
        assert_eq!(sol.allocation.bundle(0), ItemSet::single(0));
        assert_eq!(sol.allocation.bundle(1), ItemSet::single(1));
        assert_eq!(sol.welfare, int(8));
    }

    #[test]
    fn no_bidders() {
        let sol = brute_force_opt(&[], 3).unwrap();
        assert_eq!(sol.welfare, int(0));
        assert_eq!(sol.allocation.bidders(), 0);
        assert_eq!(sol.supporting_prices, PriceVector::zeros(3));
    }

    #[test]
    fn worthless_items_stay_unassigned() {
        let sol = brute_force_opt(&[additive(&[0, 4]), additive(&[0, 4])], 2).unwrap();
        assert_eq!(sol.allocation.owner(0), None);
        assert_eq!(sol.allocation.owner(1), Some(0));
    }

    #[test]
    fn budget_additive_winner_gets_scaled_prices() {
        let v = Valuation::from(BudgetAdditiveValuation::new(vec![int(2), int(2)], int(3)).unwrap());
        let sol = brute_force_opt(&[v], 2).unwrap();
        assert_eq!(sol.welfare, int(3));
        assert_eq!(sol.allocation.bundle(0), ItemSet::full(2));
        let total: Rational = sol.supporting_prices.iter().sum();
        assert_eq!(total, int(3));
    }

    #[test]
    fn cap_exceeded() {
        let vs = vec![additive(&[1; 8]); 9];
        assert!(matches!(brute_force_opt_capped(&vs, 8, 1_000), Err(Error::Capability(_))));
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(brute_force_opt(&[additive(&[1, 2])], 3), Err(Error::Shape(_))));
    }
}
