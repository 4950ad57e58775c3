//! Straightforward interpreter working on the instance data directly: a
//! junction is walked one second at a time along its phase list, and flow
//! is summed over the raw turn-rate table with wide integers.

use std::collections::BTreeMap;

use signalopt::model::{ConfigId, Instance, JunctionId, LinkId, PhaseId};
use signalopt::pcu::Capacity;
use signalopt::timeline::SignalPlan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signal {
    pub phase: PhaseId,
    pub elapsed: u32,
    pub config: ConfigId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefState {
    pub occ: BTreeMap<LinkId, i128>,
    pub counter: BTreeMap<LinkId, i128>,
    pub increments: BTreeMap<LinkId, i128>,
}

/// Signal status of every junction at every tick `0..=horizon`.
pub fn walk_signals(inst: &Instance, plan: &SignalPlan) -> Vec<BTreeMap<JunctionId, Signal>> {
    struct Walker {
        index: usize,
        elapsed: u32,
        config: ConfigId,
    }
    let mut walkers: BTreeMap<&JunctionId, Walker> = inst
        .junctions
        .values()
        .map(|j| {
            let index = j.phases.iter().position(|p| *p == j.initial.phase).unwrap();
            (
                &j.id,
                Walker {
                    index,
                    elapsed: j.initial.elapsed,
                    config: j.initial.config.clone(),
                },
            )
        })
        .collect();
    let mut used = 0usize;
    let mut out = Vec::with_capacity(inst.horizon as usize + 1);
    for t in 0..=inst.horizon {
        if t > 0 {
            for (jid, w) in walkers.iter_mut() {
                let j = &inst.junctions[*jid];
                let duration = j.configurations[&w.config].phases[w.index].1;
                w.elapsed += 1;
                if w.elapsed == duration {
                    w.elapsed = 0;
                    w.index += 1;
                    if w.index == j.phases.len() {
                        w.index = 0;
                        if let Some(entry) = plan
                            .junctions
                            .get(*jid)
                            .and_then(|es| es.iter().find(|e| e.time == t))
                        {
                            w.config = entry.config.clone();
                            used += 1;
                        }
                    }
                }
            }
        }
        out.push(
            walkers
                .iter()
                .map(|(jid, w)| {
                    let j = &inst.junctions[*jid];
                    (
                        (*jid).clone(),
                        Signal {
                            phase: j.phases[w.index].clone(),
                            elapsed: w.elapsed,
                            config: w.config.clone(),
                        },
                    )
                })
                .collect(),
        );
    }
    let planned: usize = plan.junctions.values().map(Vec::len).sum();
    assert_eq!(used, planned, "every plan entry must fall on a cycle boundary");
    out
}

/// States for t = 0..=horizon; increments are kept for every link.
pub fn reference_simulate(inst: &Instance, plan: &SignalPlan) -> Vec<RefState> {
    let signals = walk_signals(inst, plan);
    let mut state = RefState {
        occ: inst
            .links
            .values()
            .map(|l| (l.id.clone(), i128::from(l.initial_occ.scaled())))
            .collect(),
        counter: inst
            .links
            .values()
            .filter_map(|l| l.initial_counter.map(|c| (l.id.clone(), i128::from(c.scaled()))))
            .collect(),
        increments: inst.links.keys().map(|l| (l.clone(), 0)).collect(),
    };
    let mut out = vec![state.clone()];
    for t in 1..=inst.horizon as usize {
        let prev = state.clone();
        let open_out = |l: &LinkId| prev.occ[l] > 0;
        let open_in = |l: &LinkId| match inst.links[l].capacity {
            Capacity::Unbounded => true,
            Capacity::Bounded(c) => prev.occ[l] < i128::from(c.scaled()),
        };
        let mut inflow: BTreeMap<&LinkId, i128> = BTreeMap::new();
        let mut outflow: BTreeMap<&LinkId, i128> = BTreeMap::new();
        for (stage, from, to, rate) in inst.turn_rates.iter() {
            if signals[t][&stage.junction].phase != *stage {
                continue;
            }
            if open_out(from) && open_in(to) {
                *inflow.entry(to).or_default() += i128::from(rate.scaled());
                *outflow.entry(from).or_default() += i128::from(rate.scaled());
            }
        }
        for l in inst.links.keys() {
            let din = inflow.get(l).copied().unwrap_or(0);
            let dout = outflow.get(l).copied().unwrap_or(0);
            *state.occ.get_mut(l).unwrap() += din - dout;
            *state.increments.get_mut(l).unwrap() += din - dout;
            if let Some(c) = state.counter.get_mut(l) {
                *c += din;
            }
        }
        out.push(state.clone());
    }
    out
}

/// k-stability checked directly from the plan entries.
pub fn plan_is_legal(inst: &Instance, plan: &SignalPlan) -> bool {
    plan.junctions.iter().all(|(jid, entries)| {
        let j = &inst.junctions[jid];
        let mut current = &j.initial.config;
        let mut since: Option<u32> = None;
        for e in entries {
            if &e.config == current {
                continue;
            }
            let held = match since {
                None => j.initial.completed_cycles + e.cycle_index,
                Some(prev) => e.cycle_index - prev,
            };
            if held < j.stability {
                return false;
            }
            current = &e.config;
            since = Some(e.cycle_index);
        }
        true
    })
}
