mod common;

use auction_lab::auction::Market;
use auction_lab::coins::CoinTape;
use auction_lab::demand::{demand_query, profit, DemandOracle};
use auction_lab::mechanism::{bidder_utility, final_mechanism, price_learning_mechanism};
use auction_lab::oracle::brute_force_opt;
use auction_lab::price_tree::{solve_parameters, Bins, ModifiedPriceTree, Parity};
use auction_lab::rational::{self, Rational};
use auction_lab::ItemSet;
use common::*;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_matches_assignment_enumeration(seed: u64, n in 0usize..4, m in 1usize..6) {
        let mut r = rng(seed);
        let vals: Vec<_> = (0..n).map(|_| any_valuation(&mut r, m)).collect();
        let sol = brute_force_opt(&vals, m).unwrap();
        prop_assert_eq!(&sol.welfare, &reference_opt(&vals, m));
        prop_assert_eq!(&reference_welfare(&sol.allocation, &vals), &sol.welfare);
        // Supporting prices price each bundle at its value and never overprice a subset.
        for (b, v) in sol.allocation.bundles().iter().zip(&vals) {
            prop_assert_eq!(sol.supporting_prices.total(*b), reference_value(v, *b));
            for t in b.subsets() {
                prop_assert!(sol.supporting_prices.total(t) <= reference_value(v, t));
            }
        }
        let unallocated = ItemSet::full(m).difference(sol.allocation.allocated());
        prop_assert!(unallocated.iter().all(|j| sol.supporting_prices[j].is_zero()));
    }

    #[test]
    fn fixed_price_welfare_bound(seed: u64, n in 1usize..4, m in 1usize..7, delta in 1i64..5) {
        let mut r = rng(seed);
        let vals: Vec<_> = (0..n).map(|_| xos(&mut r, m, 1..=3, 1, 100)).collect();
        let sol = brute_force_opt(&vals, m).unwrap();
        let q = &sol.supporting_prices;
        let delta = rational::ratio(delta, 10);
        let p: Vec<Rational> = q.iter().map(|qj| qj * rational::ratio(r.gen_range(0..=70), 100)).collect();
        let p = auction_lab::PriceVector::new(p).unwrap();
        let half = rational::ratio(1, 2);
        let m_star: ItemSet = (0..m).filter(|&j| &delta * &q[j] <= p[j] && p[j] < &half * &q[j]).collect();
        let oracle = DemandOracle::default();
        let mut market = Market::new(&vals, m, &oracle).unwrap();
        let order: Vec<usize> = (0..n).collect();
        let a = market.fixed_price_auction(&order, ItemSet::full(m), &p).unwrap();
        prop_assert!(reference_welfare(&a, &vals) >= &delta * q.total(m_star));
    }

    #[test]
    fn demand_profit_is_optimal(seed: u64, m in 0usize..9) {
        let mut r = rng(seed);
        let v = any_valuation(&mut r, m);
        let p = prices(&mut r, m, 60);
        let s = demand_query(&v, &p).unwrap();
        prop_assert_eq!(profit(&v, &p, s), reference_best_profit(&v, &p, m));
    }

    #[test]
    fn posted_prices_are_truthful(seed: u64, n in 1usize..4, m in 1usize..6) {
        let mut r = rng(seed);
        let vals: Vec<_> = (0..n).map(|_| any_valuation(&mut r, m)).collect();
        let p = prices(&mut r, m, 40);
        let oracle = DemandOracle::default();
        let order: Vec<usize> = (0..n).collect();
        let honest = Market::new(&vals, m, &oracle).unwrap().fixed_price_auction(&order, ItemSet::full(m), &p).unwrap();
        let bidder = r.gen_range(0..n);
        let utility = |a: &auction_lab::allocation::Allocation| reference_value(&vals[bidder], a.bundle(bidder)) - a.payment(bidder);
        for _ in 0..4 {
            let mut reports = vals.clone();
            reports[bidder] = any_valuation(&mut r, m);
            let lied = Market::new(&reports, m, &oracle).unwrap().fixed_price_auction(&order, ItemSet::full(m), &p).unwrap();
            prop_assert!(utility(&lied) <= utility(&honest));
        }
    }

    #[test]
    fn leaf_accuracy_and_gap(lo in 1i64..1000, span in 0u32..9, parity in any::<bool>(), x in 0.0f64..1.0) {
        let psi_min = rational::int(lo);
        let psi_max = &psi_min * rational::int(10i64.pow(span));
        let params = solve_parameters(psi_min.clone(), psi_max.clone(), 2).unwrap();
        let parity = if parity { Parity::Odd } else { Parity::Even };
        let tree = ModifiedPriceTree::from_params(&params, parity).unwrap();
        let bins = Bins::from_params(&params);
        // A real price inside the range, placed by fraction of the log span.
        let q = rational::from_f64_rounded(lo as f64 * 10f64.powf(span as f64 * x), 4).clamp(psi_min, psi_max);
        match tree.containing_node(&q, params.beta + 1) {
            Some(leaf) => {
                let p = tree.price(leaf);
                prop_assert!(p <= &q && q <= p * &params.gamma);
            }
            None => prop_assert!(!parity.keeps(bins.bin_of(&q).unwrap())),
        }
        for level in 1..=params.beta + 1 {
            let nodes: Vec<_> = tree.nodes_at(level).collect();
            for w in nodes.windows(2) {
                let top = match tree.node_bins(w[0]).last() {
                    Some(&b) => bins.upper(b),
                    None => tree.price(w[0]).clone(),
                };
                prop_assert!(tree.price(w[1]) >= &(top * &params.gamma));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mechanism_outcomes_are_sound(seed: u64, n in 1usize..7, m in 1usize..6) {
        let mut r = rng(seed);
        let vals: Vec<_> = (0..n).map(|_| any_valuation(&mut r, m)).collect();
        let opt = brute_force_opt(&vals, m).unwrap();
        let oracle = DemandOracle::default();
        for s in 0..8 {
            let out = final_mechanism(&vals, m, &CoinTape::new(seed ^ s), &oracle).unwrap();
            out.allocation.check_disjoint().unwrap();
            prop_assert_eq!(&out.welfare, &reference_welfare(&out.allocation, &vals));
            prop_assert!(out.welfare <= opt.welfare);
            prop_assert!(out.welfare >= out.allocation.total_payments());
            for (i, v) in vals.iter().enumerate() {
                prop_assert!(bidder_utility(&out, i, v).unwrap() >= Rational::zero());
            }
        }
    }

    #[test]
    fn learning_truthful_with_deep_trees(seed: u64) {
        let mut r = rng(seed);
        let n = 22;
        let m = 3;
        let vals: Vec<_> = (0..n).map(|_| xos(&mut r, m, 1..=2, 1, 1000)).collect();
        let everyone: Vec<usize> = (0..n).collect();
        let oracle = DemandOracle::default();
        let tape = CoinTape::new(seed);
        let run = |reports: &[auction_lab::Valuation]| {
            price_learning_mechanism(reports, &everyone, m, rational::int(1), rational::int(1_000_000), &tape, &oracle).unwrap()
        };
        let honest = run(&vals);
        let record = honest.learning.as_ref().unwrap();
        prop_assert_eq!(record.params.beta, 2);
        let active: Vec<usize> = record.groups[..2].concat();
        for &b in active.iter().chain(record.groups[2].iter().take(2)) {
            let truthful = bidder_utility(&honest, b, &vals[b]).unwrap();
            for _ in 0..3 {
                let mut reports = vals.clone();
                reports[b] = xos(&mut r, m, 2..=2, 0, 1500);
                let lied = run(&reports);
                prop_assert!(bidder_utility(&lied, b, &vals[b]).unwrap() <= truthful);
            }
        }
    }
}
