mod common;

use common::gen::{oracle_instance, random_instance, rng, GenParams};
use common::oracle::{best_plan, goal_counters, max_min_counter};
use rand::Rng;

use signalopt::model::Instance;
use signalopt::objective::{Objective, ObjectiveValue};
use signalopt::pcu::Pcu;
use signalopt::search::{
    admissible_bound, beam_search, branch_and_bound, branch_and_bound_with, check_plan, enumerate_all, Mode,
    SearchProblem, Status,
};
use signalopt::timeline::decision_points;

fn problem(inst: &Instance) -> SearchProblem {
    SearchProblem::new(inst.clone(), Objective::default()).unwrap()
}

fn value(v: i128) -> ObjectiveValue {
    ObjectiveValue(vec![Pcu::from_scaled(i64::try_from(v).unwrap())])
}

#[test]
fn exhaustive_and_bnb_match_brute_force() {
    for seed in 0..40u64 {
        let (inst, legal) = oracle_instance(seed, 200);
        let (plan, v) = best_plan(&inst, &legal, 0).expect("the identity plan is feasible");
        let p = problem(&inst);
        let ex = enumerate_all(&p).unwrap();
        let bb = branch_and_bound(&p).unwrap();
        for r in [&ex, &bb] {
            assert_eq!(r.status, Status::Optimal, "seed {seed}");
            assert_eq!(r.plan.as_ref(), Some(&plan), "seed {seed}");
            assert_eq!(r.value, Some(value(v)), "seed {seed}");
        }
        assert_eq!(ex.plans_evaluated, legal.len() as u64, "seed {seed}");
        assert!(bb.nodes_explored <= ex.nodes_explored, "seed {seed}");
    }
}

#[test]
fn full_width_beam_is_exact() {
    for seed in 0..40u64 {
        let (inst, legal) = oracle_instance(seed, 200);
        let (plan, v) = best_plan(&inst, &legal, 0).unwrap();
        let r = beam_search(&problem(&inst), legal.len()).unwrap();
        assert_eq!(r.status, Status::Optimal, "seed {seed}");
        assert_eq!(r.plan, Some(plan), "seed {seed}");
        assert_eq!(r.value, Some(value(v)), "seed {seed}");
    }
}

#[test]
fn bound_is_admissible_on_every_prefix() {
    for seed in 0..30u64 {
        let (inst, legal) = oracle_instance(seed, 200);
        let p = problem(&inst);
        let choices: Vec<Vec<usize>> = legal.iter().map(|pl| p.network.choices_from_plan(&inst, pl).unwrap()).collect();
        let values: Vec<i128> = legal.iter().map(|pl| goal_counters(&inst, pl).iter().map(|(_, c)| c).sum()).collect();
        let mut r = rng(seed);
        for _ in 0..10 {
            let full = &choices[r.gen_range(0..choices.len())];
            let len = r.gen_range(0..=full.len());
            let prefix = &full[..len];
            let best = choices
                .iter()
                .zip(&values)
                .filter(|(c, _)| c.starts_with(prefix))
                .map(|(_, v)| *v)
                .max()
                .unwrap();
            let ub = admissible_bound(&p, prefix).unwrap();
            assert!(ub >= value(best), "seed {seed} prefix {prefix:?}: {ub} < {best}");
            if len == full.len() {
                assert_eq!(ub, value(best), "seed {seed}: a full plan's bound is its value");
            }
        }
    }
}

#[test]
fn beam_is_monotone_along_halving_chains() {
    for seed in 0..25u64 {
        let (inst, _) = oracle_instance(seed, 200);
        let p = problem(&inst);
        for w in 1..=6usize {
            let narrow = beam_search(&p, w).unwrap().value;
            for wide in [2 * w, 2 * w + 1] {
                let v = beam_search(&p, wide).unwrap().value;
                assert!(v >= narrow, "seed {seed}: width {wide} worse than {w}");
            }
        }
    }
}

/// Each incumbent beats the previous one: a higher value, or the same value
/// reached by a lexicographically smaller choice sequence.
#[test]
fn incumbents_improve_strictly() {
    for seed in 0..30u64 {
        let (inst, _) = oracle_instance(seed, 200);
        let p = problem(&inst);
        let mut seen: Vec<(ObjectiveValue, Vec<usize>)> = Vec::new();
        let r = branch_and_bound_with(&p, |inc| seen.push((inc.value.clone(), inc.choices.to_vec()))).unwrap();
        assert!(!seen.is_empty());
        for w in seen.windows(2) {
            let better = w[1].0 > w[0].0 || (w[1].0 == w[0].0 && w[1].1 < w[0].1);
            assert!(better, "seed {seed}: {seen:?}");
        }
        let (v, c) = seen.last().unwrap();
        assert_eq!(r.value.as_ref(), Some(v), "seed {seed}");
        assert_eq!(r.plan, Some(p.network.plan_from_choices(c)), "seed {seed}");
    }
}

#[test]
fn returned_plans_pass_the_checker() {
    for seed in 0..30u64 {
        let (inst, legal) = oracle_instance(seed, 200);
        let top = max_min_counter(&inst, &legal);
        for bound in [0, top / 2, top, top + 1] {
            let p = problem(&inst).with_bound(Pcu::from_scaled(bound as i64));
            for r in [enumerate_all(&p).unwrap(), branch_and_bound(&p).unwrap(), beam_search(&p, 4).unwrap()] {
                if let Some(plan) = &r.plan {
                    let report = check_plan(&p, plan).unwrap();
                    assert!(report.acceptable(), "seed {seed} bound {bound}: {report:?}");
                    assert_eq!(Some(&report.value), r.value.as_ref());
                    assert_eq!(report.counters, r.counters);
                }
            }
        }
    }
}

#[test]
fn decision_agrees_with_optimisation() {
    for seed in 0..30u64 {
        let (inst, legal) = oracle_instance(seed, 200);
        let top = max_min_counter(&inst, &legal);
        for bound in [0, top / 3, top, top + 1, top + 100_000] {
            let p = problem(&inst).with_bound(Pcu::from_scaled(bound as i64));
            let expect = best_plan(&inst, &legal, bound);
            assert_eq!(expect.is_some(), bound <= top);
            let opt = branch_and_bound(&p).unwrap();
            let dec = branch_and_bound(&p.clone().with_mode(Mode::Decision)).unwrap();
            let ex = enumerate_all(&p.clone().with_mode(Mode::Decision)).unwrap();
            match &expect {
                Some((plan, v)) => {
                    assert_eq!(opt.status, Status::Optimal);
                    assert_eq!(opt.plan.as_ref(), Some(plan));
                    assert_eq!(opt.value, Some(value(*v)));
                    assert_eq!(dec.status, Status::Satisfied);
                    assert_eq!(ex.status, Status::Satisfied);
                    assert!(check_plan(&p, dec.plan.as_ref().unwrap()).unwrap().acceptable());
                }
                None => {
                    for r in [&opt, &dec, &ex] {
                        assert_eq!(r.status, Status::Unsatisfiable, "seed {seed} bound {bound}");
                        assert!(r.plan.is_none());
                    }
                }
            }
        }
    }
}

/// Two controllable junctions with two configurations and two decision
/// points each: sixteen plans, all legal when k = 1.
#[test]
fn two_by_two_by_two_enumeration() {
    let params = GenParams {
        junctions: 2..=2,
        configs: 2..=2,
        cycle: 20..=20,
        horizon: 41..=60,
        k: 1..=1,
        completed: 1..=4,
        ..GenParams::default()
    };
    let inst = (0..)
        .map(|s| random_instance(s, &params))
        .find(|inst| {
            inst.junctions
                .values()
                .all(|j| j.controllable && decision_points(j, inst.horizon).unwrap().len() == 2)
        })
        .unwrap();
    let all = common::gen::all_plans(&inst);
    assert_eq!(all.len(), 16);
    let p = problem(&inst);
    assert_eq!(p.network.plan_space_size(), 16);
    let ex = enumerate_all(&p).unwrap();
    assert_eq!(ex.plans_evaluated, 16);
    let (plan, v) = best_plan(&inst, &all, 0).unwrap();
    assert_eq!(ex.plan, Some(plan));
    assert_eq!(ex.value, Some(value(v)));
    assert!(enumerate_all(&p.clone().with_enumeration_cap(15)).is_err());
}

#[test]
fn zero_width_beam_is_rejected() {
    let (inst, _) = oracle_instance(0, 200);
    assert!(beam_search(&problem(&inst), 0).is_err());
}
