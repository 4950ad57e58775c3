use crate::network::StabilityTracker;
use crate::objective::ObjectiveValue;

use super::{improves, Mode, SearchError, SearchProblem, SearchResult, Stats, Status};

/// Simulates every k-legal plan in lexicographic order and keeps the best.
/// Refuses plan spaces larger than the problem's enumeration cap.
pub fn enumerate_all(problem: &SearchProblem) -> Result<SearchResult, SearchError> {
    let net = &problem.network;
    let size = net.plan_space_size();
    if size > problem.enumeration_cap {
        return Err(SearchError::PlanSpaceTooLarge {
            size,
            cap: problem.enumeration_cap,
        });
    }
    let mut stats = Stats::start(problem.timeout);
    let mut best: Option<(Vec<usize>, ObjectiveValue)> = None;
    let mut choices = Vec::with_capacity(net.decisions.len());
    let mut trackers = vec![StabilityTracker::new(net)];
    let complete = visit(problem, &mut choices, &mut trackers, &mut stats, &mut best)?;
    let status = match (&best, problem.mode, complete) {
        (Some(_), Mode::Decision, _) => Status::Satisfied,
        (Some(_), Mode::Optimise, true) => Status::Optimal,
        (Some(_), Mode::Optimise, false) => Status::BestFound,
        (None, _, true) => Status::Unsatisfiable,
        (None, _, false) => Status::TimeoutNoSolution,
    };
    problem.result(status, best, stats)
}

/// Depth-first walk; returns false when interrupted by the deadline.
fn visit(
    problem: &SearchProblem,
    choices: &mut Vec<usize>,
    trackers: &mut Vec<StabilityTracker>,
    stats: &mut Stats,
    best: &mut Option<(Vec<usize>, ObjectiveValue)>,
) -> Result<bool, SearchError> {
    let net = &problem.network;
    stats.nodes += 1;
    if stats.expired() {
        return Ok(false);
    }
    let depth = choices.len();
    if depth == net.decisions.len() {
        stats.leaves += 1;
        let state = problem.simulate(choices)?;
        let (value, ok) = problem.assess(&state);
        if ok && improves(best, choices, &value) {
            *best = Some((choices.clone(), value));
        }
        return Ok(true);
    }
    let group = &net.groups[net.decisions[depth].junction];
    for c in 0..group.configs.len() {
        let mut tracker = trackers[depth].clone();
        if tracker.apply(net, depth, c).is_err() {
            continue;
        }
        trackers.push(tracker);
        choices.push(c);
        let finished = visit(problem, choices, trackers, stats, best)?;
        choices.pop();
        trackers.pop();
        if !finished {
            return Ok(false);
        }
        if problem.mode == Mode::Decision && best.is_some() {
            return Ok(true);
        }
    }
    Ok(true)
}
