use crate::flow::{advance, CorridorState, Scratch};
use crate::network::StabilityTracker;
use crate::objective::ObjectiveValue;

use super::relax::{open_ticks, Relaxation};
use super::{improves, Mode, SearchError, SearchProblem, SearchResult, Stats, Status};

struct Prefix {
    choices: Vec<usize>,
    state: CorridorState,
    configs: Vec<usize>,
    tracker: StabilityTracker,
    /// Objective of the exact prefix state, then the relaxed bound.
    key: (ObjectiveValue, ObjectiveValue),
}

struct Run {
    best: Option<(Vec<usize>, ObjectiveValue)>,
    /// Some prefix that could still have led to a solution was dropped.
    truncated: bool,
    timed_out: bool,
}

/// Beam search over the global decision order. Each layer keeps the `width`
/// best children ranked by their exact objective at the next decision,
/// then by their relaxed bound, then by lexicographic order. The returned
/// plan is the best over runs at widths `width, width/2, ..., 1`, so a
/// wider beam never does worse than the widths on its halving chain.
pub fn beam_search(problem: &SearchProblem, width: usize) -> Result<SearchResult, SearchError> {
    if width == 0 {
        return Err(SearchError::ZeroWidth);
    }
    let mut widths = Vec::new();
    let mut w = width;
    while w >= 1 {
        widths.push(w);
        w /= 2;
    }
    widths.reverse();

    let relax = Relaxation::new(&problem.network);
    let mut stats = Stats::start(problem.timeout);
    let mut best: Option<(Vec<usize>, ObjectiveValue)> = None;
    let mut exact = false;
    let mut timed_out = false;
    for w in widths {
        let run = run(problem, &relax, w, &mut stats)?;
        if let Some((c, v)) = run.best {
            if improves(&best, &c, &v) {
                best = Some((c, v));
            }
        }
        if run.timed_out {
            timed_out = true;
            break;
        }
        if problem.mode == Mode::Decision && best.is_some() {
            break;
        }
        if !run.truncated {
            exact = true;
            break;
        }
    }
    let status = match (&best, problem.mode) {
        (Some(_), Mode::Decision) => Status::Satisfied,
        (Some(_), Mode::Optimise) if exact => Status::Optimal,
        (Some(_), Mode::Optimise) => Status::BestFound,
        (None, _) if exact && !timed_out => Status::Unsatisfiable,
        (None, _) => Status::TimeoutNoSolution,
    };
    problem.result(status, best, stats)
}

fn run(problem: &SearchProblem, relax: &Relaxation, width: usize, stats: &mut Stats) -> Result<Run, SearchError> {
    let net = &problem.network;
    let n = net.decisions.len();
    let mut scratch = Scratch::default();
    let mut out = Run {
        best: None,
        truncated: false,
        timed_out: false,
    };

    let mut state = CorridorState::initial(net, &problem.resolved.tracked);
    let configs: Vec<usize> = net.groups.iter().map(|g| g.initial_config).collect();
    let first_stop = net.decisions.first().map_or(net.horizon, |d| d.time - 1);
    advance(net, &configs, &mut state, first_stop, &mut scratch, |_| {})?;
    stats.nodes += 1;
    let root = relax.node_bound(problem, &state, &configs, &open_ticks(net, 0));
    if !root.feasible {
        return Ok(out);
    }
    let mut layer = vec![Prefix {
        choices: Vec::new(),
        key: (problem.resolved.evaluate(&state.counter, &state.increments), root.value),
        state,
        configs,
        tracker: StabilityTracker::new(net),
    }];

    for depth in 0..n {
        let decision = net.decisions[depth];
        let stop = net.decisions.get(depth + 1).map_or(net.horizon, |d| d.time - 1);
        let open = open_ticks(net, depth + 1);
        let mut children = Vec::new();
        for parent in &layer {
            for c in 0..net.groups[decision.junction].configs.len() {
                if stats.expired() {
                    out.timed_out = true;
                    return Ok(out);
                }
                let mut tracker = parent.tracker.clone();
                if tracker.apply(net, depth, c).is_err() {
                    continue;
                }
                stats.nodes += 1;
                let mut configs = parent.configs.clone();
                configs[decision.junction] = c;
                let mut state = parent.state.clone();
                advance(net, &configs, &mut state, stop, &mut scratch, |_| {})?;
                let bound = relax.node_bound(problem, &state, &configs, &open);
                if !bound.feasible {
                    continue;
                }
                let mut choices = parent.choices.clone();
                choices.push(c);
                children.push(Prefix {
                    key: (problem.resolved.evaluate(&state.counter, &state.increments), bound.value),
                    choices,
                    state,
                    configs,
                    tracker,
                });
            }
        }
        children.sort_by(|a, b| b.key.cmp(&a.key).then_with(|| a.choices.cmp(&b.choices)));
        // Dropping leaves is harmless: their keys are exact.
        if children.len() > width && depth + 1 < n {
            out.truncated = true;
        }
        children.truncate(width);
        layer = children;
        if layer.is_empty() {
            return Ok(out);
        }
    }

    for leaf in layer {
        stats.leaves += 1;
        let (value, ok) = problem.assess(&leaf.state);
        if ok && improves(&out.best, &leaf.choices, &value) {
            out.best = Some((leaf.choices, value));
        }
    }
    Ok(out)
}
