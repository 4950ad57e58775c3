//! Index-based compilation of an [`Instance`] used by the simulator and the
//! search engines. Links, junctions, phases and configurations become dense
//! integer indices; decision points are laid out in one global order.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{validate, ConfigId, Instance, JunctionId, LinkId, PhaseId, Violation};
use crate::pcu::Pcu;
use crate::timeline::{self, SignalPlan, TimelineError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("instance is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// A gated transfer `from -> to` active during one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Movement {
    pub from: usize,
    pub to: usize,
    pub rate: i64,
}

#[derive(Clone, Debug)]
pub struct CompiledConfig {
    pub id: ConfigId,
    pub durations: Vec<u32>,
    pub begins: Vec<u32>,
    /// Phase index at every cycle-relative second.
    pub phase_at: Vec<u16>,
}

#[derive(Clone, Debug)]
pub struct SignalGroup {
    pub id: JunctionId,
    pub controllable: bool,
    pub stability: u32,
    pub completed_cycles: u32,
    pub cycle: u32,
    /// Seconds of the current cycle elapsed at time 0.
    pub offset: u32,
    pub phases: Vec<PhaseId>,
    /// Sorted by configuration id.
    pub configs: Vec<CompiledConfig>,
    pub initial_config: usize,
    /// Movements enabled by each phase; empty for intergreens.
    pub movements: Vec<Vec<Movement>>,
    /// Indices into [`Network::decisions`], ascending in time.
    pub decisions: Vec<usize>,
}

impl SignalGroup {
    pub fn position(&self, t: u32) -> usize {
        ((u64::from(t) + u64::from(self.offset)) % u64::from(self.cycle)) as usize
    }

    pub fn phase_at(&self, config: usize, t: u32) -> usize {
        usize::from(self.configs[config].phase_at[self.position(t)])
    }

    pub fn config_index(&self, id: &ConfigId) -> Option<usize> {
        self.configs.iter().position(|c| &c.id == id)
    }
}

/// A decision point in the global branching order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub junction: usize,
    pub cycle_index: u32,
    pub time: u32,
}

/// Per-phase flow sums touching one link at one junction, gates ignored.
#[derive(Clone, Debug)]
pub struct PhaseRates {
    pub junction: usize,
    pub by_phase: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub links: Vec<LinkId>,
    pub link_index: BTreeMap<LinkId, usize>,
    pub capacity: Vec<Option<i64>>,
    pub initial_occ: Vec<i64>,
    pub initial_counter: Vec<Option<i64>>,
    pub goal_links: Vec<usize>,
    pub groups: Vec<SignalGroup>,
    pub group_index: BTreeMap<JunctionId, usize>,
    /// Sorted by time, ties by junction id.
    pub decisions: Vec<Decision>,
    /// Inflow sums into each link through its upstream junction.
    pub inflow: Vec<Option<PhaseRates>>,
    /// Outflow sums out of each link through its downstream junction.
    pub outflow: Vec<Option<PhaseRates>>,
    pub horizon: u32,
    pub bound: i64,
}

impl Network {
    pub fn compile(instance: &Instance) -> Result<Network, NetworkError> {
        let violations = validate(instance);
        if !violations.is_empty() {
            return Err(NetworkError::Invalid(violations));
        }
        let links: Vec<LinkId> = instance.links.keys().cloned().collect();
        let link_index: BTreeMap<LinkId, usize> = links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let link_data: Vec<_> = instance.links.values().collect();
        let capacity = link_data
            .iter()
            .map(|l| l.capacity.limit().map(Pcu::scaled))
            .collect();
        let initial_occ = link_data.iter().map(|l| l.initial_occ.scaled()).collect();
        let initial_counter: Vec<Option<i64>> = link_data
            .iter()
            .map(|l| l.initial_counter.map(Pcu::scaled))
            .collect();
        let goal_links = (0..links.len())
            .filter(|&i| initial_counter[i].is_some())
            .collect();

        let group_index: BTreeMap<JunctionId, usize> = instance
            .junctions
            .keys()
            .enumerate()
            .map(|(i, j)| (j.clone(), i))
            .collect();
        let mut groups = Vec::with_capacity(instance.junctions.len());
        let mut decisions = Vec::new();
        for (gi, junction) in instance.junctions.values().enumerate() {
            let configs: Vec<CompiledConfig> = junction
                .configurations
                .values()
                .map(|c| {
                    let durations: Vec<u32> = c.phases.iter().map(|&(_, d)| d).collect();
                    let mut begins = Vec::with_capacity(durations.len());
                    let mut phase_at = Vec::new();
                    for (pi, &d) in durations.iter().enumerate() {
                        begins.push(phase_at.len() as u32);
                        phase_at.extend(std::iter::repeat_n(pi as u16, d as usize));
                    }
                    CompiledConfig {
                        id: c.id.clone(),
                        durations,
                        begins,
                        phase_at,
                    }
                })
                .collect();
            let initial_config = configs
                .iter()
                .position(|c| c.id == junction.initial.config)
                .expect("validated");
            let offset = timeline::elapsed_in_cycle(junction)?;
            let cycle = configs[initial_config].phase_at.len() as u32;
            if junction.controllable {
                for dp in timeline::decision_points(junction, instance.horizon)? {
                    decisions.push(Decision {
                        junction: gi,
                        cycle_index: dp.cycle_index,
                        time: dp.time,
                    });
                }
            }
            groups.push(SignalGroup {
                id: junction.id.clone(),
                controllable: junction.controllable,
                stability: junction.stability,
                completed_cycles: junction.initial.completed_cycles,
                cycle,
                offset,
                phases: junction.phases.clone(),
                movements: vec![Vec::new(); junction.phases.len()],
                configs,
                initial_config,
                decisions: Vec::new(),
            });
        }
        // Junction indices follow id order, so this sorts ties by junction id.
        decisions.sort_by_key(|d| (d.time, d.junction));
        for (di, d) in decisions.iter().enumerate() {
            groups[d.junction].decisions.push(di);
        }

        let mut inflow: Vec<Option<PhaseRates>> = vec![None; links.len()];
        let mut outflow: Vec<Option<PhaseRates>> = vec![None; links.len()];
        for (stage, from, to, rate) in instance.turn_rates.iter() {
            if rate == Pcu::ZERO {
                continue;
            }
            let gi = group_index[&stage.junction];
            let group = &mut groups[gi];
            let pi = group
                .phases
                .iter()
                .position(|p| p == stage)
                .expect("validated");
            let (fi, ti) = (link_index[from], link_index[to]);
            group.movements[pi].push(Movement {
                from: fi,
                to: ti,
                rate: rate.scaled(),
            });
            let n = group.phases.len();
            let into = inflow[ti].get_or_insert_with(|| PhaseRates {
                junction: gi,
                by_phase: vec![0; n],
            });
            into.by_phase[pi] += rate.scaled();
            let out = outflow[fi].get_or_insert_with(|| PhaseRates {
                junction: gi,
                by_phase: vec![0; n],
            });
            out.by_phase[pi] += rate.scaled();
        }

        Ok(Network {
            links,
            link_index,
            capacity,
            initial_occ,
            initial_counter,
            goal_links,
            groups,
            group_index,
            decisions,
            inflow,
            outflow,
            horizon: instance.horizon,
            bound: instance.bound.scaled(),
        })
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Number of complete assignments ignoring stability, saturating.
    pub fn plan_space_size(&self) -> u128 {
        self.decisions.iter().fold(1u128, |acc, d| {
            acc.saturating_mul(self.groups[d.junction].configs.len() as u128)
        })
    }

    /// Choices (configuration index per global decision) of the identity plan.
    pub fn identity_choices(&self) -> Vec<usize> {
        self.decisions
            .iter()
            .map(|d| self.groups[d.junction].initial_config)
            .collect()
    }

    /// Maps a plan onto one configuration index per global decision.
    pub fn choices_from_plan(&self, instance: &Instance, plan: &SignalPlan) -> Result<Vec<usize>, TimelineError> {
        let resolved = timeline::resolve_plan(instance, plan)?;
        let mut cursor = vec![0usize; self.groups.len()];
        let mut out = Vec::with_capacity(self.decisions.len());
        for d in &self.decisions {
            let group = &self.groups[d.junction];
            let choices = &resolved[&group.id];
            let (_, config) = &choices[cursor[d.junction]];
            cursor[d.junction] += 1;
            out.push(group.config_index(config).expect("resolved plans name known configs"));
        }
        Ok(out)
    }

    pub fn plan_from_choices(&self, choices: &[usize]) -> SignalPlan {
        let mut plan = SignalPlan::default();
        for group in self.groups.iter().filter(|g| g.controllable) {
            plan.junctions.insert(group.id.clone(), Vec::new());
        }
        for (d, &c) in self.decisions.iter().zip(choices) {
            let group = &self.groups[d.junction];
            plan.junctions
                .get_mut(&group.id)
                .expect("controllable")
                .push(timeline::PlanEntry {
                    cycle_index: d.cycle_index,
                    time: d.time,
                    config: group.configs[c].id.clone(),
                });
        }
        plan
    }

    /// First decision (by global index) breaking a junction's k-stability rule.
    pub fn stability_violation(&self, choices: &[usize]) -> Option<(usize, u32)> {
        let mut tracker = StabilityTracker::new(self);
        for (di, &c) in choices.iter().enumerate() {
            if let Err(held) = tracker.apply(self, di, c) {
                return Some((di, held));
            }
        }
        None
    }
}

/// Incremental k-stability bookkeeping along the global decision order.
#[derive(Clone, Debug)]
pub struct StabilityTracker {
    current: Vec<usize>,
    last_change: Vec<Option<u32>>,
}

impl StabilityTracker {
    pub fn new(net: &Network) -> Self {
        StabilityTracker {
            current: net.groups.iter().map(|g| g.initial_config).collect(),
            last_change: vec![None; net.groups.len()],
        }
    }

    pub fn current(&self, group: usize) -> usize {
        self.current[group]
    }

    /// Completed cycles the current configuration would have been held if
    /// `decision` switched away from it.
    pub fn held(&self, net: &Network, decision: usize) -> u32 {
        let d = net.decisions[decision];
        match self.last_change[d.junction] {
            None => net.groups[d.junction]
                .completed_cycles
                .saturating_add(d.cycle_index),
            Some(prev) => d.cycle_index - prev,
        }
    }

    pub fn allows(&self, net: &Network, decision: usize, config: usize) -> bool {
        let d = net.decisions[decision];
        config == self.current[d.junction]
            || self.held(net, decision) >= net.groups[d.junction].stability
    }

    /// Records the choice; on a premature change returns the cycles held.
    pub fn apply(&mut self, net: &Network, decision: usize, config: usize) -> Result<(), u32> {
        let d = net.decisions[decision];
        if config == self.current[d.junction] {
            return Ok(());
        }
        let held = self.held(net, decision);
        if held < net.groups[d.junction].stability {
            return Err(held);
        }
        self.current[d.junction] = config;
        self.last_change[d.junction] = Some(d.cycle_index);
        Ok(())
    }
}
