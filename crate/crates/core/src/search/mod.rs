//! Plan search: exhaustive enumeration, branch and bound over an admissible
//! relaxation, and beam search.
//!
//! Plans are identified by one configuration index per global decision (see
//! [`Network::decisions`]); configuration indices follow id order, so index
//! order is id order. Among plans of equal value the lexicographically
//! smallest sequence wins.

mod beam;
mod bnb;
mod exhaustive;
mod relax;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::flow::{run_choices, CorridorState, SimulationError};
use crate::model::{Instance, LinkId};
use crate::network::{Network, NetworkError};
use crate::objective::{Objective, ObjectiveError, ObjectiveValue, ResolvedObjective};
use crate::pcu::Pcu;
use crate::timeline::{stability_violations, SignalPlan, StabilityViolation, TimelineError};

pub use beam::beam_search;
pub use bnb::{branch_and_bound, branch_and_bound_with, Incumbent};
pub use exhaustive::enumerate_all;
pub use relax::{admissible_bound, Relaxation};

pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Stop at the first plan meeting every constraint.
    Decision,
    /// Best plan by the objective among those meeting every constraint.
    Optimise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Satisfied,
    Optimal,
    BestFound,
    Unsatisfiable,
    TimeoutNoSolution,
}

impl Status {
    pub fn has_plan(self) -> bool {
        matches!(self, Status::Satisfied | Status::Optimal | Status::BestFound)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Satisfied => "satisfied",
            Status::Optimal => "optimal",
            Status::BestFound => "best-found",
            Status::Unsatisfiable => "unsatisfiable",
            Status::TimeoutNoSolution => "timeout-no-solution",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Plan(#[from] TimelineError),
    #[error("baseline link {0} is not a goal link of the instance")]
    BaselineNotGoal(LinkId),
    #[error("plan space of {size} plans exceeds the enumeration cap of {cap}")]
    PlanSpaceTooLarge { size: u128, cap: u128 },
    #[error("beam width must be at least 1")]
    ZeroWidth,
}

/// An instance together with its objective, constraints and budget.
#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub instance: Instance,
    pub network: Network,
    pub objective: Objective,
    pub resolved: ResolvedObjective,
    pub mode: Mode,
    /// Every goal counter must reach this at the horizon.
    pub bound: Pcu,
    pub baseline: Option<BTreeMap<LinkId, Pcu>>,
    baseline_links: Vec<usize>,
    baseline_sum: i128,
    pub timeout: Option<Duration>,
    pub enumeration_cap: u128,
}

impl SearchProblem {
    /// Optimisation problem with the instance's own bound and no baseline.
    pub fn new(instance: Instance, objective: Objective) -> Result<Self, SearchError> {
        let network = Network::compile(&instance)?;
        let resolved = objective.resolve(&network)?;
        Ok(SearchProblem {
            bound: instance.bound,
            instance,
            network,
            objective,
            resolved,
            mode: Mode::Optimise,
            baseline: None,
            baseline_links: Vec::new(),
            baseline_sum: 0,
            timeout: None,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_bound(mut self, bound: Pcu) -> Self {
        self.bound = bound;
        self
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_enumeration_cap(mut self, cap: u128) -> Self {
        self.enumeration_cap = cap;
        self
    }

    /// Requires the plan's summed counters over the baseline links to exceed
    /// the baseline's sum strictly. An empty map leaves the constraint off.
    pub fn with_baseline(mut self, baseline: BTreeMap<LinkId, Pcu>) -> Result<Self, SearchError> {
        if baseline.is_empty() {
            self.baseline = None;
            self.baseline_links.clear();
            self.baseline_sum = 0;
            return Ok(self);
        }
        let mut links = Vec::with_capacity(baseline.len());
        for l in baseline.keys() {
            match self.network.link_index.get(l) {
                Some(&i) if self.network.initial_counter[i].is_some() => links.push(i),
                _ => return Err(SearchError::BaselineNotGoal(l.clone())),
            }
        }
        self.baseline_sum = baseline.values().map(|p| i128::from(p.scaled())).sum();
        self.baseline_links = links;
        self.baseline = Some(baseline);
        Ok(self)
    }

    pub(crate) fn bound_met(&self, counter: &[Option<Pcu>]) -> bool {
        self.network
            .goal_links
            .iter()
            .all(|&l| counter[l].unwrap_or_default() >= self.bound)
    }

    pub(crate) fn baseline_beaten(&self, counter: &[Option<Pcu>]) -> bool {
        self.baseline.is_none() || self.baseline_total(counter) > self.baseline_sum
    }

    fn baseline_total(&self, counter: &[Option<Pcu>]) -> i128 {
        self.baseline_links
            .iter()
            .map(|&l| i128::from(counter[l].unwrap_or_default().scaled()))
            .sum()
    }

    /// Objective value and constraint satisfaction of a state at the horizon.
    pub(crate) fn assess(&self, state: &CorridorState) -> (ObjectiveValue, bool) {
        let value = self.resolved.evaluate(&state.counter, &state.increments);
        let ok = self.bound_met(&state.counter) && self.baseline_beaten(&state.counter);
        (value, ok)
    }

    pub(crate) fn simulate(&self, choices: &[usize]) -> Result<CorridorState, SimulationError> {
        run_choices(&self.network, choices, &self.resolved.tracked, |_| {})
    }

    pub(crate) fn result(
        &self,
        status: Status,
        best: Option<(Vec<usize>, ObjectiveValue)>,
        stats: Stats,
    ) -> Result<SearchResult, SearchError> {
        let (plan, value, counters) = match best {
            Some((choices, value)) => {
                let state = self.simulate(&choices)?;
                let counters = self
                    .network
                    .goal_links
                    .iter()
                    .map(|&l| (self.network.links[l].clone(), state.counter[l].unwrap_or_default()))
                    .collect();
                (Some(self.network.plan_from_choices(&choices)), Some(value), counters)
            }
            None => (None, None, BTreeMap::new()),
        };
        Ok(SearchResult {
            status,
            plan,
            value,
            counters,
            nodes_explored: stats.nodes,
            plans_evaluated: stats.leaves,
            elapsed: stats.started.elapsed(),
        })
    }
}

/// Wall-clock budget and counters shared by the engines.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stats {
    pub started: Instant,
    pub deadline: Option<Instant>,
    pub nodes: u64,
    pub leaves: u64,
}

impl Stats {
    pub fn start(timeout: Option<Duration>) -> Self {
        let started = Instant::now();
        Stats {
            started,
            deadline: timeout.and_then(|t| started.checked_add(t)),
            nodes: 0,
            leaves: 0,
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// True when `(value, choices)` should replace `best`: strictly higher value,
/// or equal value with a lexicographically smaller sequence.
pub(crate) fn improves(best: &Option<(Vec<usize>, ObjectiveValue)>, choices: &[usize], value: &ObjectiveValue) -> bool {
    match best {
        None => true,
        Some((c, v)) => value > v || (value == v && choices < c.as_slice()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub status: Status,
    /// Present exactly when the status carries a plan.
    pub plan: Option<SignalPlan>,
    pub value: Option<ObjectiveValue>,
    /// Final counter of every goal link under `plan`.
    pub counters: BTreeMap<LinkId, Pcu>,
    pub nodes_explored: u64,
    pub plans_evaluated: u64,
    pub elapsed: Duration,
}

#[derive(Serialize)]
struct ScaledValue {
    scaled: i64,
    decimal: String,
}

impl From<Pcu> for ScaledValue {
    fn from(p: Pcu) -> Self {
        ScaledValue {
            scaled: p.scaled(),
            decimal: p.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ResultJson<'a> {
    status: Status,
    plan: Option<&'a SignalPlan>,
    value: Option<Vec<ScaledValue>>,
    counters: BTreeMap<String, ScaledValue>,
    nodes_explored: u64,
    plans_evaluated: u64,
    elapsed_ms: u128,
}

impl SearchResult {
    pub fn to_json(&self) -> String {
        let doc = ResultJson {
            status: self.status,
            plan: self.plan.as_ref(),
            value: self
                .value
                .as_ref()
                .map(|v| v.tiers().iter().map(|&p| p.into()).collect()),
            counters: self
                .counters
                .iter()
                .map(|(l, &c)| (l.to_string(), c.into()))
                .collect(),
            nodes_explored: self.nodes_explored,
            plans_evaluated: self.plans_evaluated,
            elapsed_ms: self.elapsed.as_millis(),
        };
        serde_json::to_string_pretty(&doc).expect("result serialises")
    }
}

/// Baseline comparison of a checked plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaselineCheck {
    pub plan_total: Pcu,
    pub baseline_total: Pcu,
    pub strictly_better: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanReport {
    pub stability_violations: Vec<StabilityViolation>,
    /// Goal links whose final counter falls short of the bound.
    pub below_bound: Vec<(LinkId, Pcu)>,
    pub baseline: Option<BaselineCheck>,
    pub value: ObjectiveValue,
    pub counters: BTreeMap<LinkId, Pcu>,
}

impl PlanReport {
    pub fn legal(&self) -> bool {
        self.stability_violations.is_empty()
    }

    pub fn bound_met(&self) -> bool {
        self.below_bound.is_empty()
    }

    /// Legal and meeting every constraint.
    pub fn acceptable(&self) -> bool {
        self.legal()
            && self.bound_met()
            && self.baseline.as_ref().is_none_or(|b| b.strictly_better)
    }
}

fn saturate(v: i128) -> Pcu {
    Pcu::from_scaled(v.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64)
}

/// Legality, constraints and objective value of a complete plan.
pub fn check_plan(problem: &SearchProblem, plan: &SignalPlan) -> Result<PlanReport, SearchError> {
    let violations = stability_violations(&problem.instance, plan)?;
    let choices = problem.network.choices_from_plan(&problem.instance, plan)?;
    let state = problem.simulate(&choices)?;
    let net = &problem.network;
    let counters: BTreeMap<LinkId, Pcu> = net
        .goal_links
        .iter()
        .map(|&l| (net.links[l].clone(), state.counter[l].unwrap_or_default()))
        .collect();
    let below_bound = counters
        .iter()
        .filter(|(_, &c)| c < problem.bound)
        .map(|(l, &c)| (l.clone(), c))
        .collect();
    let baseline = problem.baseline.as_ref().map(|_| {
        let total = problem.baseline_total(&state.counter);
        BaselineCheck {
            plan_total: saturate(total),
            baseline_total: saturate(problem.baseline_sum),
            strictly_better: total > problem.baseline_sum,
        }
    });
    Ok(PlanReport {
        stability_violations: violations,
        below_bound,
        baseline,
        value: problem.resolved.evaluate(&state.counter, &state.increments),
        counters,
    })
}
