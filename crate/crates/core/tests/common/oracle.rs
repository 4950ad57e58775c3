//! Brute-force optimum over an explicit list of plans, evaluated with the
//! reference interpreter.

use signalopt::model::{Instance, LinkId};
use signalopt::timeline::SignalPlan;

use super::reference::reference_simulate;

/// Final counter of every goal link under `plan`.
pub fn goal_counters(inst: &Instance, plan: &SignalPlan) -> Vec<(LinkId, i128)> {
    let states = reference_simulate(inst, plan);
    let last = states.last().expect("at least the initial state");
    inst.goal_links().map(|l| (l.id.clone(), last.counter[&l.id])).collect()
}

/// Best plan under the default objective among `plans` (assumed legal and
/// listed in lexicographic order) whose goal counters all reach `bound`.
/// Ties go to the earliest plan.
pub fn best_plan(inst: &Instance, plans: &[SignalPlan], bound: i128) -> Option<(SignalPlan, i128)> {
    let mut best: Option<(SignalPlan, i128)> = None;
    for p in plans {
        let counters = goal_counters(inst, p);
        if counters.iter().any(|(_, c)| *c < bound) {
            continue;
        }
        let v: i128 = counters.iter().map(|(_, c)| c).sum();
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((p.clone(), v));
        }
    }
    best
}

/// Largest bound for which some plan in `plans` meets it on every goal link.
pub fn max_min_counter(inst: &Instance, plans: &[SignalPlan]) -> i128 {
    plans
        .iter()
        .map(|p| goal_counters(inst, p).into_iter().map(|(_, c)| c).min().expect("a goal link"))
        .max()
        .expect("at least one plan")
}
