//! Cycle arithmetic: phase ranges, decision points, signal plans and the
//! per-tick signal status of every junction.
//!
//! All configurations of a junction share one cycle length `D`. If `S0` is
//! the number of seconds of the current cycle already elapsed at time 0, the
//! `c`-th cycle ends at `c * D - S0`; those instants are the only moments a
//! controllable junction may switch configuration. The cycle-relative clock
//! at tick `t` is therefore `(t + S0) mod D` regardless of the choices made.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConfigId, Configuration, Instance, Junction, JunctionId, PhaseId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("{junction}: initial elapsed time {elapsed} s is not below the duration {duration} s of {phase}")]
    ElapsedBeyondPhase {
        junction: JunctionId,
        phase: PhaseId,
        elapsed: u32,
        duration: u32,
    },
    #[error("{junction}: initial phase {phase} is not part of configuration {config}")]
    PhaseNotInConfig {
        junction: JunctionId,
        phase: PhaseId,
        config: ConfigId,
    },
    #[error("{junction}: unknown configuration {config}")]
    UnknownConfig {
        junction: JunctionId,
        config: ConfigId,
    },
    #[error("{junction}: cycle duration is zero")]
    EmptyCycle { junction: JunctionId },
    #[error("tick {t} is outside 0..={horizon}")]
    OutOfRange { t: u32, horizon: u32 },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Sum of all phase durations.
pub fn cycle_duration(config: &Configuration) -> u32 {
    config.phases.iter().map(|&(_, d)| d).sum()
}

/// Cycle-relative interval `[begin, end]` (inclusive) of one phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseRange {
    pub phase: PhaseId,
    pub config: ConfigId,
    pub begin: u32,
    pub end: u32,
}

pub fn phase_ranges(config: &Configuration) -> Vec<PhaseRange> {
    let mut begin = 0;
    config
        .phases
        .iter()
        .map(|(phase, d)| {
            let range = PhaseRange {
                phase: phase.clone(),
                config: config.id.clone(),
                begin,
                end: begin + d - 1,
            };
            begin += d;
            range
        })
        .collect()
}

fn initial_config(junction: &Junction) -> Result<&Configuration, TimelineError> {
    junction
        .configurations
        .get(&junction.initial.config)
        .ok_or_else(|| TimelineError::UnknownConfig {
            junction: junction.id.clone(),
            config: junction.initial.config.clone(),
        })
}

/// Seconds of the current cycle already elapsed at time 0.
pub fn elapsed_in_cycle(junction: &Junction) -> Result<u32, TimelineError> {
    let config = initial_config(junction)?;
    let init = &junction.initial;
    let range = phase_ranges(config)
        .into_iter()
        .find(|r| r.phase == init.phase)
        .ok_or_else(|| TimelineError::PhaseNotInConfig {
            junction: junction.id.clone(),
            phase: init.phase.clone(),
            config: config.id.clone(),
        })?;
    let duration = range.end - range.begin + 1;
    if init.elapsed >= duration {
        return Err(TimelineError::ElapsedBeyondPhase {
            junction: junction.id.clone(),
            phase: init.phase.clone(),
            elapsed: init.elapsed,
            duration,
        });
    }
    Ok(range.begin + init.elapsed)
}

/// The instant at which a junction's `cycle_index`-th cycle ends.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecisionPoint {
    pub junction: JunctionId,
    pub cycle_index: u32,
    pub time: u32,
}

/// Cycle ends strictly inside `(0, horizon)`, in ascending order.
pub fn decision_points(
    junction: &Junction,
    horizon: u32,
) -> Result<Vec<DecisionPoint>, TimelineError> {
    let config = initial_config(junction)?;
    let cycle = cycle_duration(config);
    if cycle == 0 {
        return Err(TimelineError::EmptyCycle {
            junction: junction.id.clone(),
        });
    }
    let offset = elapsed_in_cycle(junction)?;
    let mut points = Vec::new();
    let mut cycle_index = 1u32;
    loop {
        let time = u64::from(cycle_index) * u64::from(cycle) - u64::from(offset);
        if time + 1 > u64::from(horizon) {
            break;
        }
        points.push(DecisionPoint {
            junction: junction.id.clone(),
            cycle_index,
            time: time as u32,
        });
        cycle_index += 1;
    }
    Ok(points)
}

/// One configuration choice of a [`SignalPlan`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub cycle_index: u32,
    pub time: u32,
    pub config: ConfigId,
}

/// Configuration chosen at every decision point of every controllable
/// junction. Non-controllable junctions keep their initial configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub junctions: BTreeMap<JunctionId, Vec<PlanEntry>>,
}

impl SignalPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Plan that never changes any configuration.
pub fn identity_plan(instance: &Instance) -> Result<SignalPlan, TimelineError> {
    let mut plan = SignalPlan::default();
    for junction in instance.junctions.values().filter(|j| j.controllable) {
        let entries = decision_points(junction, instance.horizon)?
            .into_iter()
            .map(|dp| PlanEntry {
                cycle_index: dp.cycle_index,
                time: dp.time,
                config: junction.initial.config.clone(),
            })
            .collect();
        plan.junctions.insert(junction.id.clone(), entries);
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("plan names unknown junction {0}")]
    UnknownJunction(JunctionId),
    #[error("plan sets configurations for non-controllable junction {0}")]
    NotControllable(JunctionId),
    #[error("{junction}: configuration {config} is not available (cycle {cycle_index})")]
    UnknownConfig {
        junction: JunctionId,
        cycle_index: u32,
        config: ConfigId,
    },
    #[error("{junction}: no choice for cycle {cycle_index} ending at t={time}")]
    MissingDecision {
        junction: JunctionId,
        cycle_index: u32,
        time: u32,
    },
    #[error("{junction}: cycle {cycle_index} at t={time} is not a decision point")]
    UnexpectedDecision {
        junction: JunctionId,
        cycle_index: u32,
        time: u32,
    },
}

/// Checks `plan` against the decision points of `instance` and returns, per
/// junction, the configuration chosen at each decision point in time order.
pub fn resolve_plan(
    instance: &Instance,
    plan: &SignalPlan,
) -> Result<BTreeMap<JunctionId, Vec<(DecisionPoint, ConfigId)>>, TimelineError> {
    for (jid, entries) in &plan.junctions {
        let junction = instance
            .junctions
            .get(jid)
            .ok_or_else(|| PlanError::UnknownJunction(jid.clone()))?;
        if !junction.controllable && !entries.is_empty() {
            return Err(PlanError::NotControllable(jid.clone()).into());
        }
    }
    let mut resolved = BTreeMap::new();
    for junction in instance.junctions.values().filter(|j| j.controllable) {
        let points = decision_points(junction, instance.horizon)?;
        let entries: &[PlanEntry] = plan
            .junctions
            .get(&junction.id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let mut by_cycle: BTreeMap<u32, &PlanEntry> = BTreeMap::new();
        for entry in entries {
            let matching = points
                .iter()
                .any(|dp| dp.cycle_index == entry.cycle_index && dp.time == entry.time);
            if !matching || by_cycle.insert(entry.cycle_index, entry).is_some() {
                return Err(PlanError::UnexpectedDecision {
                    junction: junction.id.clone(),
                    cycle_index: entry.cycle_index,
                    time: entry.time,
                }
                .into());
            }
            if !junction.configurations.contains_key(&entry.config) {
                return Err(PlanError::UnknownConfig {
                    junction: junction.id.clone(),
                    cycle_index: entry.cycle_index,
                    config: entry.config.clone(),
                }
                .into());
            }
        }
        let mut choices = Vec::with_capacity(points.len());
        for dp in points {
            let entry = by_cycle
                .get(&dp.cycle_index)
                .ok_or_else(|| PlanError::MissingDecision {
                    junction: junction.id.clone(),
                    cycle_index: dp.cycle_index,
                    time: dp.time,
                })?;
            choices.push((dp, entry.config.clone()));
        }
        resolved.insert(junction.id.clone(), choices);
    }
    Ok(resolved)
}

/// Signal status of one junction at one tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JunctionStatus {
    pub junction: JunctionId,
    pub phase: PhaseId,
    /// Seconds since `phase` became active.
    pub elapsed: u32,
    pub config: ConfigId,
}

/// Active phase, elapsed seconds and configuration of every junction at `t`.
pub fn active_state(
    instance: &Instance,
    plan: &SignalPlan,
    t: u32,
) -> Result<Vec<JunctionStatus>, TimelineError> {
    if t > instance.horizon {
        return Err(TimelineError::OutOfRange {
            t,
            horizon: instance.horizon,
        });
    }
    let resolved = resolve_plan(instance, plan)?;
    instance
        .junctions
        .values()
        .map(|junction| {
            let choices = resolved.get(&junction.id).map(Vec::as_slice).unwrap_or(&[]);
            status_at(junction, choices, t)
        })
        .collect()
}

/// Per-tick signal table `time,junction,active_p,active_t,active_c` for
/// t = 0..=horizon, junctions in id order.
pub fn timeline_csv(instance: &Instance, plan: &SignalPlan) -> Result<String, TimelineError> {
    let resolved = resolve_plan(instance, plan)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = "writing to memory cannot fail";
    w.write_record(["time", "junction", "active_p", "active_t", "active_c"])
        .expect(io);
    for t in 0..=instance.horizon {
        for junction in instance.junctions.values() {
            let choices = resolved.get(&junction.id).map(Vec::as_slice).unwrap_or(&[]);
            let s = status_at(junction, choices, t)?;
            w.write_record([
                t.to_string(),
                s.junction.to_string(),
                s.phase.to_string(),
                s.elapsed.to_string(),
                s.config.to_string(),
            ])
            .expect(io);
        }
    }
    Ok(String::from_utf8(w.into_inner().expect(io)).expect("csv output is UTF-8"))
}

fn status_at(
    junction: &Junction,
    choices: &[(DecisionPoint, ConfigId)],
    t: u32,
) -> Result<JunctionStatus, TimelineError> {
    let cycle = cycle_duration(initial_config(junction)?);
    let offset = elapsed_in_cycle(junction)?;
    let config_id = choices
        .iter()
        .take_while(|(dp, _)| dp.time <= t)
        .last()
        .map(|(_, c)| c)
        .unwrap_or(&junction.initial.config);
    let config =
        junction
            .configurations
            .get(config_id)
            .ok_or_else(|| TimelineError::UnknownConfig {
                junction: junction.id.clone(),
                config: config_id.clone(),
            })?;
    let pos = ((u64::from(t) + u64::from(offset)) % u64::from(cycle)) as u32;
    let range = phase_ranges(config)
        .into_iter()
        .find(|r| r.begin <= pos && pos <= r.end)
        .ok_or(TimelineError::EmptyCycle {
            junction: junction.id.clone(),
        })?;
    Ok(JunctionStatus {
        junction: junction.id.clone(),
        phase: range.phase,
        elapsed: pos - range.begin,
        config: config_id.clone(),
    })
}

/// A configuration change that came too soon after the previous one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityViolation {
    pub junction: JunctionId,
    pub cycle_index: u32,
    /// Completed cycles under the previous configuration at the change.
    pub held: u32,
    pub required: u32,
}

impl fmt::Display for StabilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: configuration changed at the end of cycle {} after {} completed cycle(s); k = {} required",
            self.junction, self.cycle_index, self.held, self.required
        )
    }
}

/// Applies the k-stability rule to one junction's choices.
///
/// A change at the end of cycle `c` is legal when the configuration it
/// replaces has been held for at least `k` completed cycles: `initial + c`
/// cycles for the first change, `c - c_prev` for later ones.
pub fn first_stability_violation<'a>(
    initial: &'a ConfigId,
    initial_completed: u32,
    k: u32,
    choices: impl IntoIterator<Item = (u32, &'a ConfigId)>,
) -> Option<(u32, u32)> {
    let mut current = initial;
    let mut last_change: Option<u32> = None;
    for (cycle_index, config) in choices {
        if config == current {
            continue;
        }
        let held = match last_change {
            None => initial_completed.saturating_add(cycle_index),
            Some(prev) => cycle_index - prev,
        };
        if held < k {
            return Some((cycle_index, held));
        }
        current = config;
        last_change = Some(cycle_index);
    }
    None
}

/// Every junction whose choices in `plan` break its k-stability rule.
pub fn stability_violations(
    instance: &Instance,
    plan: &SignalPlan,
) -> Result<Vec<StabilityViolation>, TimelineError> {
    let resolved = resolve_plan(instance, plan)?;
    let mut out = Vec::new();
    for (jid, choices) in &resolved {
        let junction = &instance.junctions[jid];
        if let Some((cycle_index, held)) = first_stability_violation(
            &junction.initial.config,
            junction.initial.completed_cycles,
            junction.stability,
            choices.iter().map(|(dp, c)| (dp.cycle_index, c)),
        ) {
            out.push(StabilityViolation {
                junction: jid.clone(),
                cycle_index,
                held,
                required: junction.stability,
            });
        }
    }
    Ok(out)
}

/// True iff every junction respects its k-stability rule.
pub fn legal_plans_filter(instance: &Instance, plan: &SignalPlan) -> Result<bool, TimelineError> {
    Ok(stability_violations(instance, plan)?.is_empty())
}
