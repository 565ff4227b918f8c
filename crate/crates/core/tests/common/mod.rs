//! Random instances and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use auction_lab::allocation::Allocation;
use auction_lab::rational::{self, Rational};
use auction_lab::{BudgetAdditiveValuation, ItemSet, PriceVector, Valuation, XosValuation};
use rand::Rng;

pub fn int(n: i64) -> Rational {
    rational::int(n)
}

/// Integer entry in `lo..=hi`, or a two-decimal value when `fractional`.
pub fn entry(rng: &mut impl Rng, lo: i64, hi: i64, fractional: bool) -> Rational {
    if fractional {
        rational::ratio(rng.gen_range(lo * 100..=hi * 100), 100)
    } else {
        int(rng.gen_range(lo..=hi))
    }
}

pub fn xos(rng: &mut impl Rng, m: usize, clauses: std::ops::RangeInclusive<usize>, lo: i64, hi: i64) -> Valuation {
    let clauses = rng.gen_range(clauses);
    let rows = (0..clauses).map(|_| (0..m).map(|_| entry(rng, lo, hi, false)).collect()).collect();
    Valuation::from(XosValuation::from_rows(rows).unwrap())
}

pub fn budget_additive(rng: &mut impl Rng, m: usize, lo: i64, hi: i64) -> Valuation {
    let values: Vec<Rational> = (0..m).map(|_| entry(rng, lo, hi, true)).collect();
    let total: Rational = values.iter().sum();
    let budget = &total * rational::ratio(rng.gen_range(20..=110), 100);
    Valuation::from(BudgetAdditiveValuation::new(values, budget).unwrap())
}

/// A mix of XOS (sometimes with zero entries) and budget-additive bidders.
pub fn any_valuation(rng: &mut impl Rng, m: usize) -> Valuation {
    match rng.gen_range(0..3) {
        0 => xos(rng, m, 1..=4, 1, 100),
        1 => xos(rng, m, 1..=3, 0, 20),
        _ => budget_additive(rng, m, 0, 50),
    }
}

pub fn prices(rng: &mut impl Rng, m: usize, hi: i64) -> PriceVector {
    PriceVector::new((0..m).map(|_| entry(rng, 0, hi, true)).collect()).unwrap()
}

/// Value straight from the definition, without the library's helpers.
pub fn reference_value(v: &Valuation, set: ItemSet) -> Rational {
    match v {
        Valuation::Xos(x) => x
            .clauses()
            .iter()
            .map(|c| set.iter().map(|j| c.item_values()[j].clone()).sum::<Rational>())
            .max()
            .unwrap(),
        Valuation::BudgetAdditive(b) => {
            let sum: Rational = set.iter().map(|j| b.item_values()[j].clone()).sum();
            sum.min(b.budget().clone())
        }
    }
}

/// Best profit over all `2^m` bundles.
pub fn reference_best_profit(v: &Valuation, p: &PriceVector, m: usize) -> Rational {
    (0u64..1 << m)
        .map(|bits| {
            let s = ItemSet::from_bits(bits);
            reference_value(v, s) - s.iter().map(|j| p[j].clone()).sum::<Rational>()
        })
        .max()
        .unwrap()
}

/// Optimal welfare by walking all `(n+1)^m` owner assignments.
pub fn reference_opt(vals: &[Valuation], m: usize) -> Rational {
    let n = vals.len();
    let mut owner = vec![0usize; m];
    let mut best = int(0);
    loop {
        let mut bundles = vec![ItemSet::EMPTY; n];
        for (j, &o) in owner.iter().enumerate() {
            if o > 0 {
                bundles[o - 1] = bundles[o - 1].with(j);
            }
        }
        let w: Rational = bundles.iter().zip(vals).map(|(b, v)| reference_value(v, *b)).sum();
        best = best.max(w);
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            owner[k] += 1;
            if owner[k] <= n {
                break;
            }
            owner[k] = 0;
            k += 1;
        }
    }
}

pub fn reference_welfare(a: &Allocation, vals: &[Valuation]) -> Rational {
    a.bundles().iter().zip(vals).map(|(b, v)| reference_value(v, *b)).sum()
}
