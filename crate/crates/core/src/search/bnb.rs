use std::time::Duration;

use crate::flow::{advance, CorridorState, Scratch};
use crate::network::StabilityTracker;
use crate::objective::ObjectiveValue;

use super::relax::{open_ticks, Relaxation};
use super::{improves, Mode, SearchError, SearchProblem, SearchResult, Stats, Status};

/// A new incumbent reported during branch and bound.
#[derive(Clone, Copy, Debug)]
pub struct Incumbent<'a> {
    pub choices: &'a [usize],
    pub value: &'a ObjectiveValue,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

pub fn branch_and_bound(problem: &SearchProblem) -> Result<SearchResult, SearchError> {
    branch_and_bound_with(problem, |_| {})
}

/// Depth-first branch and bound over the global decision order. Children
/// keep the current configuration first; a node is pruned when its relaxed
/// bound cannot meet the constraints, falls below the incumbent, or only
/// ties it with a lexicographically larger prefix. `on_incumbent` sees every
/// improvement, in order of strictly increasing quality.
pub fn branch_and_bound_with(
    problem: &SearchProblem,
    mut on_incumbent: impl FnMut(&Incumbent<'_>),
) -> Result<SearchResult, SearchError> {
    let net = &problem.network;
    let mut search = Bnb {
        problem,
        relax: Relaxation::new(net),
        stats: Stats::start(problem.timeout),
        best: None,
        scratch: Scratch::default(),
        on_incumbent: &mut on_incumbent,
    };
    let mut state = CorridorState::initial(net, &problem.resolved.tracked);
    let configs: Vec<usize> = net.groups.iter().map(|g| g.initial_config).collect();
    let first_stop = net.decisions.first().map_or(net.horizon, |d| d.time - 1);
    advance(net, &configs, &mut state, first_stop, &mut search.scratch, |_| {})?;
    let mut choices = Vec::with_capacity(net.decisions.len());
    let complete = search.node(&mut choices, state, configs, StabilityTracker::new(net))?;
    let status = match (&search.best, problem.mode, complete) {
        (Some(_), Mode::Decision, _) => Status::Satisfied,
        (Some(_), Mode::Optimise, true) => Status::Optimal,
        (Some(_), Mode::Optimise, false) => Status::BestFound,
        (None, _, true) => Status::Unsatisfiable,
        (None, _, false) => Status::TimeoutNoSolution,
    };
    problem.result(status, search.best, search.stats)
}

struct Bnb<'a, 'f> {
    problem: &'a SearchProblem,
    relax: Relaxation,
    stats: Stats,
    best: Option<(Vec<usize>, ObjectiveValue)>,
    scratch: Scratch,
    on_incumbent: &'f mut dyn FnMut(&Incumbent<'_>),
}

impl Bnb<'_, '_> {
    /// `state` is exact through the tick before decision `choices.len()`, or
    /// through the horizon at a leaf. Returns false when the deadline hits.
    fn node(
        &mut self,
        choices: &mut Vec<usize>,
        state: CorridorState,
        configs: Vec<usize>,
        tracker: StabilityTracker,
    ) -> Result<bool, SearchError> {
        let net = &self.problem.network;
        self.stats.nodes += 1;
        if self.stats.expired() {
            return Ok(false);
        }
        let depth = choices.len();
        if depth == net.decisions.len() {
            self.stats.leaves += 1;
            let (value, ok) = self.problem.assess(&state);
            if ok && improves(&self.best, choices, &value) {
                self.best = Some((choices.clone(), value));
                let (c, v) = self.best.as_ref().expect("just set");
                (self.on_incumbent)(&Incumbent {
                    choices: c,
                    value: v,
                    nodes_explored: self.stats.nodes,
                    elapsed: self.stats.started.elapsed(),
                });
            }
            return Ok(true);
        }

        let open = open_ticks(net, depth);
        let bound = self.relax.node_bound(self.problem, &state, &configs, &open);
        if !bound.feasible {
            return Ok(true);
        }
        if let Some((inc_choices, inc_value)) = &self.best {
            if bound.value < *inc_value
                || (bound.value == *inc_value && choices.as_slice() > &inc_choices[..depth])
            {
                return Ok(true);
            }
        }

        let decision = net.decisions[depth];
        let group = &net.groups[decision.junction];
        let current = tracker.current(decision.junction);
        let order = std::iter::once(current).chain((0..group.configs.len()).filter(|&c| c != current));
        let stop = net.decisions.get(depth + 1).map_or(net.horizon, |d| d.time - 1);
        for c in order {
            let mut child_tracker = tracker.clone();
            if child_tracker.apply(net, depth, c).is_err() {
                continue;
            }
            let mut child_configs = configs.clone();
            child_configs[decision.junction] = c;
            let mut child_state = state.clone();
            advance(net, &child_configs, &mut child_state, stop, &mut self.scratch, |_| {})?;
            choices.push(c);
            let finished = self.node(choices, child_state, child_configs, child_tracker)?;
            choices.pop();
            if !finished {
                return Ok(false);
            }
            if self.problem.mode == Mode::Decision && self.best.is_some() {
                return Ok(true);
            }
        }
        Ok(true)
    }
}
