mod common;

use common::gen::{random_instance, random_plan, GenParams};
use common::invariants::{bounded_excursion, counter_monotone, pairwise_conservation};
use common::reference::reference_simulate;

use signalopt::flow::{objective_value, simulate};
use signalopt::model::LinkId;
use signalopt::network::Network;
use signalopt::objective::Objective;
use signalopt::pcu::Pcu;
use signalopt::timeline::identity_plan;

#[test]
fn simulate_equals_reference_interpreter() {
    for seed in 0..400u64 {
        let inst = random_instance(seed, &GenParams::default());
        let plan = random_plan(seed, &inst);
        let trace = simulate(&inst, &plan).unwrap();
        let reference = reference_simulate(&inst, &plan);
        assert_eq!(trace.states.len(), reference.len());
        for (s, r) in trace.states.iter().zip(&reference) {
            for (i, l) in trace.links.iter().enumerate() {
                assert_eq!(i128::from(s.occ[i].scaled()), r.occ[l], "seed {seed} t {} {l}", s.t);
                assert_eq!(s.counter[i].map(|c| i128::from(c.scaled())), r.counter.get(l).copied(), "seed {seed}");
                assert_eq!(s.increments[i].map(|c| i128::from(c.scaled())), Some(r.increments[l]), "seed {seed}");
            }
        }
    }
}

#[test]
fn closed_ring_conserves_and_respects_gates() {
    let params = GenParams {
        open: false,
        junctions: 2..=4,
        ..GenParams::default()
    };
    for seed in 0..150u64 {
        let inst = random_instance(seed, &params);
        let net = Network::compile(&inst).unwrap();
        let plan = random_plan(seed, &inst);
        let trace = simulate(&inst, &plan).unwrap();
        let total = |t: usize| trace.states[t].occ.iter().map(|o| i128::from(o.scaled())).sum::<i128>();
        for t in 0..trace.states.len() {
            assert_eq!(total(t), total(0), "seed {seed} t {t}");
        }
        assert!(pairwise_conservation(&inst, &net, &plan, &trace).is_empty());
        assert!(counter_monotone(&trace).is_empty());
        assert!(bounded_excursion(&net, &trace).is_empty());
    }
}

#[test]
fn objective_equals_recomputation_from_trace() {
    for seed in 0..100u64 {
        let inst = random_instance(seed, &GenParams::default());
        let net = Network::compile(&inst).unwrap();
        let plan = random_plan(seed, &inst);
        let trace = simulate(&inst, &plan).unwrap();
        let goals: Vec<LinkId> = inst.goal_links().map(|l| l.id.clone()).collect();
        let counters = trace.final_counters();
        let want: i64 = goals.iter().map(|l| counters[l].scaled()).sum();
        let got = objective_value(&net, &trace, &Objective::default()).unwrap();
        assert_eq!(got.tiers(), &[Pcu::from_scaled(want)]);

        let all: Vec<LinkId> = inst.links.keys().cloned().collect();
        let (flush, slow) = all.split_at(all.len() / 2);
        let flush: Vec<LinkId> = flush.iter().filter(|l| goals.contains(l)).cloned().collect();
        let slow: Vec<LinkId> = slow.iter().filter(|l| goals.contains(l)).cloned().collect();
        if flush.is_empty() || slow.is_empty() {
            continue;
        }
        let v = objective_value(&net, &trace, &Objective::flush_and_slow(flush.clone(), slow.clone())).unwrap();
        let f: i64 = flush.iter().map(|l| counters[l].scaled()).sum();
        let s: i64 = slow.iter().map(|l| counters[l].scaled()).sum();
        assert_eq!(v.tiers(), &[Pcu::from_scaled(f), Pcu::from_scaled(-s)]);
    }
}

#[test]
fn occupancy_objectives_use_increments() {
    for seed in 0..60u64 {
        let inst = random_instance(seed, &GenParams::default());
        let net = Network::compile(&inst).unwrap();
        let plan = identity_plan(&inst).unwrap();
        let trace = simulate(&inst, &plan).unwrap();
        let l = inst.links.keys().next().unwrap().clone();
        let text = format!("max-occupancy[{l}]");
        let v = objective_value(&net, &trace, &text.parse().unwrap()).unwrap();
        let first = trace.states.first().unwrap().occ[0];
        let last = trace.last().occ[0];
        assert_eq!(v.tiers(), &[last - first]);
        let text = format!("min-occupancy[{l}]");
        let v = objective_value(&net, &trace, &text.parse().unwrap()).unwrap();
        assert_eq!(v.tiers(), &[first - last]);
    }
}

#[test]
fn hand_trace_fixture() {
    let inst = signalopt::parse_instance(&common::read_fixture("chain.lp")).unwrap();
    let trace = simulate(&inst, &identity_plan(&inst).unwrap()).unwrap();
    let src = LinkId::new("w", "a", "j1");
    let mid = LinkId::new("j1", "b", "j2");
    let dst = LinkId::new("j2", "c", "e");
    let col = |l: &LinkId| (0..=4).map(|t| trace.occ(t, l).unwrap().scaled()).collect::<Vec<_>>();
    assert_eq!(col(&src), [300_000, 250_000, 200_000, 150_000, 100_000]);
    assert_eq!(col(&mid), [0, 50_000, 50_000, 50_000, 50_000]);
    assert_eq!(col(&dst), [0, 0, 50_000, 100_000, 150_000]);
    let counter: Vec<i64> = (0..=4).map(|t| trace.counter(t, &mid).unwrap().scaled()).collect();
    assert_eq!(counter, [0, 50_000, 100_000, 150_000, 200_000]);
}
