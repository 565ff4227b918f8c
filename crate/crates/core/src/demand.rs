//! Demand queries: `argmax_S v(S) − p(S)` with a deterministic tie-break.
//!
//! Ties go to the smallest bundle, then to the lexicographically smallest
//! sorted index sequence (see [`ItemSet::canonical_cmp`]).
//!
//! Backends:
//! - exhaustive enumeration (Gray-code order over the available items) up to
//!   [`DemandOracle::exhaustive_cap`] items;
//! - above the cap, XOS valuations are answered clause by clause: the optimum
//!   is `max_r Σ_j max(0, a_r(j) − p_j)` and the canonical optimal bundle is the
//!   canonical minimum of the positive-margin sets of the optimal clauses;
//! - above the cap, budget-additive valuations go to a knapsack DP over
//!   integer-scaled prices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::price::PriceVector;
use crate::rational::Rational;
use crate::scaled::{common_scale, narrow, Acc};
use crate::valuation::{BudgetAdditiveValuation, Valuation, XosValuation};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Exhaustive up to the cap, specialized backends above it.
    #[default]
    Auto,
    /// Exhaustive only; larger queries fail with a capability error.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackConfig {
    /// Prices are rounded to multiples of `1/scale`. `None` scales exactly by
    /// the common denominator of the prices.
    pub price_scale: Option<BigInt>,
    /// Upper bound on DP table cells, `k·(k+1)·(C+1)` for `k` items and total
    /// scaled cost `C`.
    pub max_table_entries: usize,
}

impl Default for KnapsackConfig {
    fn default() -> Self {
        KnapsackConfig { price_scale: None, max_table_entries: 50_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandOracle {
    pub exhaustive_cap: usize,
    pub backend: Backend,
    pub knapsack: KnapsackConfig,
}

impl Default for DemandOracle {
    fn default() -> Self {
        DemandOracle { exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP, backend: Backend::Auto, knapsack: KnapsackConfig::default() }
    }
}

/// Demand over all items with the default oracle.
pub fn demand_query(v: &Valuation, p: &PriceVector) -> Result<ItemSet> {
    DemandOracle::default().demand_query(v, p)
}

impl DemandOracle {
    pub fn exhaustive() -> Self {
        DemandOracle { backend: Backend::Exhaustive, ..DemandOracle::default() }
    }

    pub fn demand_query(&self, v: &Valuation, p: &PriceVector) -> Result<ItemSet> {
        self.demand_within(v, p, ItemSet::full(v.item_count()))
    }

    /// Demand restricted to bundles drawn from `available`.
    pub fn demand_within(&self, v: &Valuation, p: &PriceVector, available: ItemSet) -> Result<ItemSet> {
        let m = v.item_count();
        p.check_len(m)?;
        available.check_within(m)?;
        if p.iter().any(|x| x.is_negative()) {
            return Err(Error::Domain("demand query with a negative price".into()));
        }
        let items: Vec<usize> = available.iter().collect();
        if items.len() <= self.exhaustive_cap {
            return Ok(exhaustive(v, p, &items));
        }
        match (self.backend, v) {
            (Backend::Exhaustive, _) => Err(Error::Capability(format!(
                "{} items exceeds the exhaustive demand cap of {}",
                items.len(),
                self.exhaustive_cap
            ))),
            (Backend::Auto, Valuation::Xos(x)) => Ok(xos_clausewise(x, p, &items)),
            (Backend::Auto, Valuation::BudgetAdditive(b)) => budget_knapsack(b, p, &items, &self.knapsack),
        }
    }
}

/// Profit `v(S) − p(S)` of a bundle.
pub fn profit(v: &Valuation, p: &PriceVector, set: ItemSet) -> Rational {
    v.value(set) - p.total(set)
}

enum Profile<T> {
    /// `margins[r][idx] = a_r(item) − p_item`.
    Xos(Vec<Vec<T>>),
    Budget { values: Vec<T>, prices: Vec<T>, budget: T },
}

fn exhaustive(v: &Valuation, p: &PriceVector, items: &[usize]) -> ItemSet {
    let k = items.len();
    match v {
        Valuation::Xos(x) => {
            let t = x.clauses().len();
            let margins: Vec<Rational> = x
                .clauses()
                .iter()
                .flat_map(|c| items.iter().map(move |&j| &c.item_values()[j] - &p[j]))
                .collect();
            let scaled = common_scale(&margins.iter().collect::<Vec<_>>());
            match narrow(&scaled, k) {
                Some(ints) => gray_search(items, &Profile::Xos(split_rows(ints, k, t))),
                None => gray_search(items, &Profile::Xos(split_rows(scaled, k, t))),
            }
        }
        Valuation::BudgetAdditive(b) => {
            let mut all: Vec<&Rational> = items.iter().map(|&j| &b.item_values()[j]).collect();
            all.extend(items.iter().map(|&j| &p[j]));
            all.push(b.budget());
            let mut scaled = common_scale(&all);
            match narrow(&scaled, 2 * k + 1) {
                Some(mut ints) => {
                    let budget = ints.pop().expect("budget present");
                    let prices = ints.split_off(k);
                    gray_search(items, &Profile::Budget { values: ints, prices, budget })
                }
                None => {
                    let budget = scaled.pop().expect("budget present");
                    let prices = scaled.split_off(k);
                    gray_search(items, &Profile::Budget { values: scaled, prices, budget })
                }
            }
        }
    }
}

fn split_rows<T: Clone>(flat: Vec<T>, k: usize, t: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new(); t];
    }
    flat.chunks(k).map(<[T]>::to_vec).collect()
}

fn gray_search<T: Acc>(items: &[usize], profile: &Profile<T>) -> ItemSet {
    let k = items.len();
    let mut mask = ItemSet::EMPTY;
    let mut best = ItemSet::EMPTY;
    let mut best_profit = T::zero();
    let (mut sums, mut sum_v, mut sum_p) = match profile {
        Profile::Xos(rows) => (vec![T::zero(); rows.len()], T::zero(), T::zero()),
        Profile::Budget { .. } => (Vec::new(), T::zero(), T::zero()),
    };
    for step in 1u64..(1u64 << k) {
        let idx = step.trailing_zeros() as usize;
        let item = items[idx];
        let adding = !mask.contains(item);
        mask = if adding { mask.with(item) } else { mask.difference(ItemSet::single(item)) };
        let current = match profile {
            Profile::Xos(rows) => {
                for (s, row) in sums.iter_mut().zip(rows) {
                    if adding {
                        *s += &row[idx];
                    } else {
                        *s -= &row[idx];
                    }
                }
                sums.iter().max().expect("at least one clause").clone()
            }
            Profile::Budget { values, prices, budget } => {
                if adding {
                    sum_v += &values[idx];
                    sum_p += &prices[idx];
                } else {
                    sum_v -= &values[idx];
                    sum_p -= &prices[idx];
                }
                let mut gain = sum_v.clone().min(budget.clone());
                gain -= &sum_p;
                gain
            }
        };
        if current > best_profit || (current == best_profit && mask.canonical_cmp(best).is_lt()) {
            best_profit = current;
            best = mask;
        }
    }
    best
}

fn xos_clausewise(v: &XosValuation, p: &PriceVector, items: &[usize]) -> ItemSet {
    let mut best_profit = Rational::zero();
    let mut best = ItemSet::EMPTY;
    for clause in v.clauses() {
        let mut gain = Rational::zero();
        let mut positive = ItemSet::EMPTY;
        for &j in items {
            let margin = &clause.item_values()[j] - &p[j];
            if margin.is_positive() {
                gain += margin;
                positive = positive.with(j);
            }
        }
        if gain > best_profit || (gain == best_profit && positive.canonical_cmp(best).is_lt()) {
            best_profit = gain;
            best = positive;
        }
    }
    best
}

const UNREACHABLE: i128 = i128::MIN;

fn budget_knapsack(v: &BudgetAdditiveValuation, p: &PriceVector, items: &[usize], cfg: &KnapsackConfig) -> Result<ItemSet> {
    let k = items.len();
    let cap_err = |what: &str| Error::Capability(format!("knapsack demand backend: {what}"));

    let mut vals: Vec<&Rational> = items.iter().map(|&j| &v.item_values()[j]).collect();
    vals.push(v.budget());
    let mut vals = narrow(&common_scale(&vals), k + 1).ok_or_else(|| cap_err("values overflow i128"))?;
    let value_scale = vals_denominator(v, items);
    let budget = vals.pop().expect("budget present");

    let (costs, price_scale): (Vec<u64>, BigInt) = match &cfg.price_scale {
        None => {
            let ps: Vec<&Rational> = items.iter().map(|&j| &p[j]).collect();
            let scale = ps.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
            let costs = ps.iter().map(|&r| (r * Rational::from_integer(scale.clone())).to_integer().to_u64());
            (costs.collect::<Option<_>>().ok_or_else(|| cap_err("prices too large to scale"))?, scale)
        }
        Some(scale) => {
            let s = Rational::from_integer(scale.clone());
            let costs = items.iter().map(|&j| (&p[j] * &s).round().to_integer().to_u64());
            (costs.collect::<Option<_>>().ok_or_else(|| cap_err("prices too large to scale"))?, scale.clone())
        }
    };
    let total: u64 = costs.iter().sum();
    let cells = (k as u128 + 1) * (k as u128 + 1) * (total as u128 + 1);
    if cells > cfg.max_table_entries as u128 {
        return Err(cap_err(&format!("{cells} table cells exceeds the limit of {}", cfg.max_table_entries)));
    }
    let width = total as usize + 1;
    let stride = (k + 1) * width;
    let at = |j: usize, n: usize, c: usize| j * stride + n * width + c;

    // suffix[j][n][c]: best raw value sum using exactly n of items[j..] at cost c.
    let mut suffix = vec![UNREACHABLE; (k + 1) * stride];
    suffix[at(k, 0, 0)] = 0;
    for j in (0..k).rev() {
        let cost = costs[j] as usize;
        for n in 0..=k - j {
            for c in 0..width {
                let mut best = suffix[at(j + 1, n, c)];
                if n > 0 && c >= cost {
                    let prev = suffix[at(j + 1, n - 1, c - cost)];
                    if prev != UNREACHABLE {
                        best = best.max(prev + vals[j]);
                    }
                }
                suffix[at(j, n, c)] = best;
            }
        }
    }

    // Profit scaled by value_scale·price_scale: min(b, V)·ps − c·vs.
    let ps = price_scale.to_i128().ok_or_else(|| cap_err("price scale overflows i128"))?;
    let vs = value_scale.to_i128().ok_or_else(|| cap_err("value scale overflows i128"))?;
    let score = |value: i128, cost: usize| -> Result<i128> {
        value
            .min(budget)
            .checked_mul(ps)
            .and_then(|a| (cost as i128).checked_mul(vs).and_then(|b| a.checked_sub(b)))
            .ok_or_else(|| cap_err("profit overflows i128"))
    };

    let mut opt = 0i128;
    let mut size = 0usize;
    for n in 0..=k {
        for c in 0..width {
            let value = suffix[at(0, n, c)];
            if value != UNREACHABLE {
                let s = score(value, c)?;
                if s > opt {
                    opt = s;
                    size = n;
                }
            }
        }
    }

    let completes = |j: usize, need: usize, value: i128, cost: usize| -> Result<bool> {
        for c in 0..width.saturating_sub(cost) {
            let rest = suffix[at(j, need, c)];
            if rest != UNREACHABLE && score(value + rest, cost + c)? == opt {
                return Ok(true);
            }
        }
        Ok(false)
    };

    let (mut chosen, mut need, mut value, mut cost) = (ItemSet::EMPTY, size, 0i128, 0usize);
    for j in 0..k {
        if need == 0 {
            break;
        }
        let (v2, c2) = (value + vals[j], cost + costs[j] as usize);
        if completes(j + 1, need - 1, v2, c2)? {
            chosen = chosen.with(items[j]);
            need -= 1;
            value = v2;
            cost = c2;
        }
    }
    Ok(chosen)
}

fn vals_denominator(v: &BudgetAdditiveValuation, items: &[usize]) -> BigInt {
    items
        .iter()
        .map(|&j| &v.item_values()[j])
        .chain(std::iter::once(v.budget()))
        .fold(BigInt::one(), |l, r| l.lcm(r.denom()))
}
