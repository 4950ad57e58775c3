//! Seeded random corridors.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signalopt::model::{
    ConfigId, Configuration, InitialSignal, Instance, Junction, JunctionId, Link, LinkId, PhaseId,
};
use signalopt::pcu::{Capacity, Pcu};
use signalopt::timeline::{decision_points, PlanEntry, SignalPlan};

#[derive(Clone, Debug)]
pub struct GenParams {
    pub junctions: RangeInclusive<usize>,
    pub configs: RangeInclusive<usize>,
    pub stages: RangeInclusive<u32>,
    pub cycle: RangeInclusive<u32>,
    pub horizon: RangeInclusive<u32>,
    pub k: RangeInclusive<u32>,
    pub completed: RangeInclusive<u32>,
    /// Upper end of turn rates, scaled.
    pub max_rate: i64,
    /// Upper end of initial occupancies and capacities, scaled.
    pub max_occ: i64,
    /// Links leave the junction set (entry and exit roads) when true.
    pub open: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            junctions: 1..=3,
            configs: 1..=3,
            stages: 1..=3,
            cycle: 8..=30,
            horizon: 0..=80,
            k: 1..=3,
            completed: 0..=4,
            max_rate: 150_000,
            max_occ: 2_000_000,
            open: true,
        }
    }
}

impl GenParams {
    /// Small corridors of the size used for oracle comparisons.
    pub fn oracle() -> Self {
        GenParams {
            junctions: 2..=3,
            configs: 2..=2,
            stages: 1..=3,
            cycle: 20..=45,
            horizon: 30..=120,
            k: 1..=3,
            ..GenParams::default()
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn junction_name(i: usize) -> String {
    format!("j{}", i + 1)
}

/// Splits `total` into `parts` positive integers.
fn split(rng: &mut ChaCha8Rng, total: u32, parts: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// A chain `j1 -> j2 -> ...`; with `open`, every junction also has an entry
/// road and an exit road. Closed corridors form a ring instead.
pub fn random_instance(seed: u64, p: &GenParams) -> Instance {
    let mut rng = rng(seed);
    let n = rng.gen_range(p.junctions.clone());
    let mut inst = Instance {
        horizon: rng.gen_range(p.horizon.clone()),
        ..Instance::default()
    };

    let mut links: Vec<LinkId> = Vec::new();
    for i in 0..n {
        let j = junction_name(i);
        if p.open {
            links.push(LinkId::new(format!("s{}", i + 1), "in", j.clone()));
            links.push(LinkId::new(j.clone(), "out", format!("x{}", i + 1)));
            if i + 1 < n {
                links.push(LinkId::new(j.clone(), "m", junction_name(i + 1)));
            }
        } else {
            links.push(LinkId::new(j.clone(), "m", junction_name((i + 1) % n)));
            links.push(LinkId::new(j.clone(), "r", junction_name((i + 1) % n)));
        }
    }
    for id in &links {
        let mut link = Link::new(id.clone());
        if rng.gen_bool(0.6) {
            let cap = rng.gen_range(0..=p.max_occ);
            link.capacity = Capacity::Bounded(Pcu::from_scaled(cap));
            link.initial_occ = Pcu::from_scaled(rng.gen_range(0..=cap));
        } else {
            link.initial_occ = Pcu::from_scaled(rng.gen_range(0..=p.max_occ));
        }
        if rng.gen_bool(0.5) {
            link.initial_counter = Some(Pcu::from_scaled(rng.gen_range(0..=p.max_occ / 4)));
        }
        inst.links.insert(id.clone(), link);
    }
    if inst.goal_links().next().is_none() {
        let l = links.choose(&mut rng).expect("at least one link");
        inst.links.get_mut(l).unwrap().initial_counter = Some(Pcu::ZERO);
    }

    for i in 0..n {
        let jid = JunctionId::new(junction_name(i));
        let stages = rng.gen_range(p.stages.clone());
        let mut phases = Vec::new();
        for s in 1..=stages {
            phases.push(PhaseId::stage(jid.as_str(), s));
            phases.push(PhaseId::inter(jid.as_str(), s));
        }
        let cycle = rng.gen_range(p.cycle.clone()).max(phases.len() as u32);
        let nconf = rng.gen_range(p.configs.clone());
        let mut configurations = BTreeMap::new();
        for c in 0..nconf {
            let id = ConfigId::new(format!("{}_c{}", jid, c + 1));
            let durations = split(&mut rng, cycle, phases.len());
            configurations.insert(
                id.clone(),
                Configuration {
                    id,
                    junction: jid.clone(),
                    phases: phases.iter().cloned().zip(durations).collect(),
                },
            );
        }
        let config = configurations.keys().nth(rng.gen_range(0..nconf)).unwrap().clone();
        let pi = rng.gen_range(0..phases.len());
        let duration = configurations[&config].phases[pi].1;
        let initial = InitialSignal {
            phase: phases[pi].clone(),
            elapsed: rng.gen_range(0..duration),
            config,
            completed_cycles: rng.gen_range(p.completed.clone()),
        };

        let incoming: Vec<&LinkId> = links.iter().filter(|l| l.to == jid).collect();
        let outgoing: Vec<&LinkId> = links.iter().filter(|l| l.from == jid).collect();
        for stage in phases.iter().filter(|p| p.is_stage()) {
            for &from in &incoming {
                for &to in &outgoing {
                    if rng.gen_bool(0.6) {
                        let rate = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=p.max_rate) };
                        inst.turn_rates.insert(stage.clone(), from.clone(), to.clone(), Pcu::from_scaled(rate));
                    }
                }
            }
        }

        inst.junctions.insert(
            jid.clone(),
            Junction {
                id: jid.clone(),
                controllable: rng.gen_bool(0.85),
                phases,
                configurations,
                initial,
                stability: rng.gen_range(p.k.clone()),
            },
        );
    }
    inst
}

/// Uniformly random plan over the instance's decision points, legal or not.
pub fn random_plan(seed: u64, inst: &Instance) -> SignalPlan {
    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut plan = SignalPlan::default();
    for j in inst.junctions.values().filter(|j| j.controllable) {
        let configs: Vec<&ConfigId> = j.configurations.keys().collect();
        let entries = decision_points(j, inst.horizon)
            .unwrap()
            .into_iter()
            .map(|dp| PlanEntry {
                cycle_index: dp.cycle_index,
                time: dp.time,
                config: (*configs.choose(&mut rng).unwrap()).clone(),
            })
            .collect();
        plan.junctions.insert(j.id.clone(), entries);
    }
    plan
}

/// Every plan over the decision points (legal or not), in lexicographic
/// order of configuration ids with earlier decisions first.
pub fn all_plans(inst: &Instance) -> Vec<SignalPlan> {
    let mut slots: Vec<(JunctionId, u32, u32, Vec<ConfigId>)> = Vec::new();
    for j in inst.junctions.values().filter(|j| j.controllable) {
        for dp in decision_points(j, inst.horizon).unwrap() {
            slots.push((j.id.clone(), dp.cycle_index, dp.time, j.configurations.keys().cloned().collect()));
        }
    }
    slots.sort_by(|a, b| (a.2, &a.0).cmp(&(b.2, &b.0)));
    let mut out = Vec::new();
    let mut idx = vec![0usize; slots.len()];
    loop {
        let mut plan = SignalPlan::default();
        for j in inst.junctions.values().filter(|j| j.controllable) {
            plan.junctions.insert(j.id.clone(), Vec::new());
        }
        for (slot, &i) in slots.iter().zip(&idx) {
            plan.junctions.get_mut(&slot.0).unwrap().push(PlanEntry {
                cycle_index: slot.1,
                time: slot.2,
                config: slot.3[i].clone(),
            });
        }
        out.push(plan);
        // Odometer increment, last slot fastest.
        let mut pos = slots.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < slots[pos].3.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Oracle-sized corridor: at most `max_legal` k-legal plans out of at most
/// 4096 plans overall. Tries successive seeds derived from `seed`.
pub fn oracle_instance(seed: u64, max_legal: usize) -> (Instance, Vec<SignalPlan>) {
    let params = GenParams::oracle();
    for attempt in 0.. {
        let inst = random_instance(seed.wrapping_mul(1_000_003).wrapping_add(attempt), &params);
        let slots: u32 = inst
            .junctions
            .values()
            .filter(|j| j.controllable && j.configurations.len() > 1)
            .map(|j| decision_points(j, inst.horizon).unwrap().len() as u32)
            .sum();
        if slots > 12 {
            continue;
        }
        let legal: Vec<SignalPlan> = all_plans(&inst)
            .into_iter()
            .filter(|p| super::reference::plan_is_legal(&inst, p))
            .collect();
        if legal.len() <= max_legal {
            return (inst, legal);
        }
    }
    unreachable!()
}
