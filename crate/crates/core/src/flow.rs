//! Second-by-second mesoscopic flow.
//!
//! At tick `t` every green movement `L1 -> L2` of the active stage transfers
//! its turn rate when `L1` was non-empty and `L2` was not full at `t - 1`.
//! Occupancy changes by inflow minus outflow, goal counters accumulate the
//! inflow only. Nothing is clamped, so a link may overshoot its capacity or
//! dip below zero by at most one tick of flow.

use std::collections::BTreeMap;
use std::io;

use thiserror::Error;

use crate::model::{Instance, LinkId};
use crate::network::{Network, NetworkError};
use crate::objective::{Objective, ObjectiveError, ObjectiveValue};
use crate::pcu::Pcu;
use crate::timeline::{SignalPlan, TimelineError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("fixed-point overflow on {link} at t={t}")]
    Overflow { t: u32, link: LinkId },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Corridor status at one tick, indexed by the network's link order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CorridorState {
    pub t: u32,
    pub occ: Vec<Pcu>,
    /// `Some` exactly for goal links.
    pub counter: Vec<Option<Pcu>>,
    /// `Some` exactly for tracked links.
    pub increments: Vec<Option<Pcu>>,
}

impl CorridorState {
    pub fn initial(net: &Network, tracked: &[usize]) -> Self {
        let mut increments = vec![None; net.link_count()];
        for &l in tracked {
            increments[l] = Some(Pcu::ZERO);
        }
        CorridorState {
            t: 0,
            occ: net.initial_occ.iter().map(|&o| Pcu::from_scaled(o)).collect(),
            counter: net
                .initial_counter
                .iter()
                .map(|c| c.map(Pcu::from_scaled))
                .collect(),
            increments,
        }
    }
}

/// Flow gates of one link, read from the previous tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub not_empty: bool,
    pub not_full: bool,
}

pub fn gates(net: &Network, state: &CorridorState) -> Vec<Gate> {
    state
        .occ
        .iter()
        .zip(&net.capacity)
        .map(|(&occ, cap)| gate(occ.scaled(), *cap))
        .collect()
}

#[inline]
fn gate(occ: i64, capacity: Option<i64>) -> Gate {
    Gate {
        not_empty: occ > 0,
        not_full: capacity.is_none_or(|c| occ < c),
    }
}

/// Inflow and outflow of one link during one tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickDelta {
    pub delta_in: Pcu,
    pub delta_out: Pcu,
}

impl TickDelta {
    pub fn total(&self) -> Pcu {
        self.delta_in - self.delta_out
    }
}

/// Active phase index of every signal group at tick `t` given each group's
/// configuration.
pub fn active_phases(net: &Network, configs: &[usize], t: u32) -> Vec<usize> {
    net.groups
        .iter()
        .zip(configs)
        .map(|(g, &c)| g.phase_at(c, t))
        .collect()
}

/// Per-link delta, summing incoming links then outgoing links in link order.
pub fn tick_delta(net: &Network, phases: &[usize], state: &CorridorState, link: usize) -> TickDelta {
    let gates = gates(net, state);
    let id = &net.links[link];
    let mut delta = TickDelta::default();
    if let Some(&g) = net.group_index.get(&id.from) {
        let mut incoming: Vec<_> = net.groups[g].movements[phases[g]]
            .iter()
            .filter(|m| m.to == link)
            .collect();
        incoming.sort_by_key(|m| m.from);
        for m in incoming {
            if gates[m.from].not_empty && gates[link].not_full {
                delta.delta_in += Pcu::from_scaled(m.rate);
            }
        }
    }
    if let Some(&g) = net.group_index.get(&id.to) {
        let mut outgoing: Vec<_> = net.groups[g].movements[phases[g]]
            .iter()
            .filter(|m| m.from == link)
            .collect();
        outgoing.sort_by_key(|m| m.to);
        for m in outgoing {
            if gates[link].not_empty && gates[m.to].not_full {
                delta.delta_out += Pcu::from_scaled(m.rate);
            }
        }
    }
    delta
}

/// One gated transfer that happened during a tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub amount: Pcu,
}

/// Every transfer of the tick following `state`, movement by movement.
pub fn tick_transfers(net: &Network, phases: &[usize], state: &CorridorState) -> Vec<Transfer> {
    let gates = gates(net, state);
    let mut out = Vec::new();
    for (group, &phase) in net.groups.iter().zip(phases) {
        for m in &group.movements[phase] {
            if gates[m.from].not_empty && gates[m.to].not_full {
                out.push(Transfer {
                    from: m.from,
                    to: m.to,
                    amount: Pcu::from_scaled(m.rate),
                });
            }
        }
    }
    out
}

/// Reusable buffers for [`step`].
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    delta_in: Vec<i64>,
    delta_out: Vec<i64>,
    not_empty: Vec<bool>,
    not_full: Vec<bool>,
}

/// Advances `state` by one tick under the given active phases.
pub fn step(
    net: &Network,
    phases: &[usize],
    state: &mut CorridorState,
    scratch: &mut Scratch,
) -> Result<(), SimulationError> {
    let n = net.link_count();
    let t = state.t + 1;
    scratch.delta_in.clear();
    scratch.delta_in.resize(n, 0);
    scratch.delta_out.clear();
    scratch.delta_out.resize(n, 0);
    scratch.not_empty.clear();
    scratch.not_full.clear();
    for (occ, cap) in state.occ.iter().zip(&net.capacity) {
        let g = gate(occ.scaled(), *cap);
        scratch.not_empty.push(g.not_empty);
        scratch.not_full.push(g.not_full);
    }
    let overflow = |l: usize| SimulationError::Overflow {
        t,
        link: net.links[l].clone(),
    };
    for (group, &phase) in net.groups.iter().zip(phases) {
        for m in &group.movements[phase] {
            if scratch.not_empty[m.from] && scratch.not_full[m.to] {
                scratch.delta_in[m.to] = scratch.delta_in[m.to]
                    .checked_add(m.rate)
                    .ok_or_else(|| overflow(m.to))?;
                scratch.delta_out[m.from] = scratch.delta_out[m.from]
                    .checked_add(m.rate)
                    .ok_or_else(|| overflow(m.from))?;
            }
        }
    }
    for l in 0..n {
        let (din, dout) = (scratch.delta_in[l], scratch.delta_out[l]);
        if din == 0 && dout == 0 {
            continue;
        }
        let total = din.checked_sub(dout).ok_or_else(|| overflow(l))?;
        let delta = Pcu::from_scaled(total);
        state.occ[l] = state.occ[l].checked_add(delta).ok_or_else(|| overflow(l))?;
        if let Some(c) = state.counter[l].as_mut() {
            *c = c
                .checked_add(Pcu::from_scaled(din))
                .ok_or_else(|| overflow(l))?;
        }
        if let Some(inc) = state.increments[l].as_mut() {
            *inc = inc.checked_add(delta).ok_or_else(|| overflow(l))?;
        }
    }
    state.t = t;
    Ok(())
}

/// Runs ticks `state.t + 1 ..= until` with every group's configuration fixed.
pub fn advance(
    net: &Network,
    configs: &[usize],
    state: &mut CorridorState,
    until: u32,
    scratch: &mut Scratch,
    mut observe: impl FnMut(&CorridorState),
) -> Result<(), SimulationError> {
    let mut phases = vec![0usize; net.groups.len()];
    while state.t < until {
        let t = state.t + 1;
        for ((p, g), &c) in phases.iter_mut().zip(&net.groups).zip(configs) {
            *p = g.phase_at(c, t);
        }
        step(net, &phases, state, scratch)?;
        observe(state);
    }
    Ok(())
}

/// Simulates a full plan given as one configuration index per global
/// decision, calling `observe` on every state from t = 0 to the horizon.
pub fn run_choices(
    net: &Network,
    choices: &[usize],
    tracked: &[usize],
    mut observe: impl FnMut(&CorridorState),
) -> Result<CorridorState, SimulationError> {
    let mut state = CorridorState::initial(net, tracked);
    let mut configs: Vec<usize> = net.groups.iter().map(|g| g.initial_config).collect();
    let mut scratch = Scratch::default();
    observe(&state);
    let mut i = 0;
    while i < net.decisions.len() {
        let time = net.decisions[i].time;
        advance(net, &configs, &mut state, time - 1, &mut scratch, &mut observe)?;
        while i < net.decisions.len() && net.decisions[i].time == time {
            configs[net.decisions[i].junction] = choices[i];
            i += 1;
        }
    }
    advance(net, &configs, &mut state, net.horizon, &mut scratch, &mut observe)?;
    Ok(state)
}

/// Full per-tick record of a simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub links: Vec<LinkId>,
    pub states: Vec<CorridorState>,
}

impl Trace {
    pub fn last(&self) -> &CorridorState {
        self.states.last().expect("a trace holds at least the initial state")
    }

    fn index(&self, link: &LinkId) -> Option<usize> {
        self.links.binary_search(link).ok()
    }

    pub fn occ(&self, t: u32, link: &LinkId) -> Option<Pcu> {
        Some(self.states.get(t as usize)?.occ[self.index(link)?])
    }

    pub fn counter(&self, t: u32, link: &LinkId) -> Option<Pcu> {
        self.states.get(t as usize)?.counter[self.index(link)?]
    }

    /// Final counter of every goal link.
    pub fn final_counters(&self) -> BTreeMap<LinkId, Pcu> {
        let last = self.last();
        self.links
            .iter()
            .zip(&last.counter)
            .filter_map(|(l, c)| c.map(|c| (l.clone(), c)))
            .collect()
    }

    /// CSV with columns `time,link,occ,occ_pcu,counter,counter_pcu`; the
    /// counter columns are empty for non-goal links.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "link", "occ", "occ_pcu", "counter", "counter_pcu"])?;
        for state in &self.states {
            for (i, link) in self.links.iter().enumerate() {
                let occ = state.occ[i];
                let (c, cd) = match state.counter[i] {
                    Some(c) => (c.scaled().to_string(), c.to_string()),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    state.t.to_string(),
                    link.to_string(),
                    occ.scaled().to_string(),
                    occ.to_string(),
                    c,
                    cd,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `plan` on `instance` from t = 0 to the horizon. Occupancy
/// increments are tracked for every link.
pub fn simulate(instance: &Instance, plan: &SignalPlan) -> Result<Trace, SimulationError> {
    let net = Network::compile(instance)?;
    let choices = net.choices_from_plan(instance, plan)?;
    simulate_choices(&net, &choices)
}

pub fn simulate_choices(net: &Network, choices: &[usize]) -> Result<Trace, SimulationError> {
    let tracked: Vec<usize> = (0..net.link_count()).collect();
    let mut states = Vec::with_capacity(net.horizon as usize + 1);
    run_choices(net, choices, &tracked, |s| states.push(s.clone()))?;
    Ok(Trace {
        links: net.links.clone(),
        states,
    })
}

/// Objective value at the end of a complete trace.
pub fn objective_value(
    net: &Network,
    trace: &Trace,
    objective: &Objective,
) -> Result<ObjectiveValue, ObjectiveError> {
    let resolved = objective.resolve(net)?;
    let last = trace.last();
    Ok(resolved.evaluate(&last.counter, &last.increments))
}
