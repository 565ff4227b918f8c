use auction_lab::demand::DemandOracle;
use auction_lab::harness::trace_runs;
use auction_lab::instance::Instance;
use auction_lab::oracle::brute_force_opt;
use auction_lab::rational::int;
use auction_lab::trace::check_lemma_branches;
use auction_lab::{Valuation, XosValuation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn boundary_prices_satisfy_a_branch_every_iteration() {
    // With range [1, 10^6] the bins start at 1, 80, 6400, 512000.
    let boundaries = [1i64, 80, 6400, 512_000];
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let vals: Vec<Valuation> = (0..40)
        .map(|_| {
            let row = (0..4).map(|_| int(boundaries[r.gen_range(0..4)])).collect();
            Valuation::from(XosValuation::additive(row).unwrap())
        })
        .collect();
    let inst = Instance::new(4, vals).unwrap();
    let opt = brute_force_opt(&inst.valuations, inst.m).unwrap();
    let seeds: Vec<u64> = (0..1000).collect();
    let traces = trace_runs(&inst, &opt, (int(1), int(1_000_000)), &seeds, &DemandOracle::default()).unwrap();
    for t in &traces {
        t.check_invariants().unwrap();
    }
    let report = check_lemma_branches(&traces, &opt.welfare, 2, 2, 1000);
    assert!(report.warning.is_none());
    assert_eq!(report.iterations.len(), 2);
    for it in &report.iterations {
        assert!(it.consistent, "{it:?}");
        assert!(it.learnable || it.allocatable, "{it:?}");
    }
}

#[test]
fn too_few_seeds_warns() {
    let inst = Instance::new(1, vec![Valuation::from(XosValuation::additive(vec![int(3)]).unwrap())]).unwrap();
    let opt = brute_force_opt(&inst.valuations, 1).unwrap();
    let traces = trace_runs(&inst, &opt, (int(1), int(1)), &[0, 1], &DemandOracle::default()).unwrap();
    let report = check_lemma_branches(&traces, &opt.welfare, 2, traces[0].beta, 10);
    assert!(report.warning.is_some());
    assert_eq!(report.iterations.len(), 1);
}
