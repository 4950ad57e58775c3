//! Admissible relaxation of the remaining horizon.
//!
//! From a node whose state is exact through tick `s`, every later tick is
//! relaxed: gates are assumed open and, wherever a junction's configuration
//! is still undecided, the configuration maximising the relevant flow is
//! taken independently per tick. Since counters only grow by inflow and an
//! occupancy increment changes by inflow minus outflow, this yields upper
//! bounds on every objective term.

use crate::flow::CorridorState;
use crate::network::{Network, PhaseRates};
use crate::objective::{ObjectiveValue, Quantity};
use crate::pcu::Pcu;

use super::{SearchError, SearchProblem};

/// Cumulative ungated flow of one link through one junction.
#[derive(Clone, Debug)]
struct FlowTable {
    junction: usize,
    /// `per_config[c][t]`: flow over ticks `1..=t` under configuration `c`.
    per_config: Vec<Vec<i64>>,
    /// Flow over ticks `1..=t` taking the best configuration at every tick.
    best: Vec<i64>,
}

impl FlowTable {
    fn build(net: &Network, rates: &PhaseRates) -> Self {
        let group = &net.groups[rates.junction];
        let h = net.horizon;
        let mut per_config = Vec::with_capacity(group.configs.len());
        for c in 0..group.configs.len() {
            let mut cum = Vec::with_capacity(h as usize + 1);
            let mut acc = 0i64;
            cum.push(0);
            for t in 1..=h {
                acc = acc.saturating_add(rates.by_phase[group.phase_at(c, t)]);
                cum.push(acc);
            }
            per_config.push(cum);
        }
        let mut best = Vec::with_capacity(h as usize + 1);
        let mut acc = 0i64;
        best.push(0);
        for t in 1..=h {
            let m = (0..group.configs.len())
                .map(|c| rates.by_phase[group.phase_at(c, t)])
                .max()
                .unwrap_or(0);
            acc = acc.saturating_add(m);
            best.push(acc);
        }
        FlowTable {
            junction: rates.junction,
            per_config,
            best,
        }
    }

    /// Flow bound over ticks `s+1..=h`; the configuration is `config` before
    /// tick `open` and free from `open` on.
    fn bound(&self, s: u32, h: u32, config: usize, open: u32) -> i64 {
        if s >= h {
            return 0;
        }
        let split = open.clamp(s + 1, h + 1);
        let fixed = &self.per_config[config];
        let determined = fixed[(split - 1) as usize] - fixed[s as usize];
        let free = self.best[h as usize] - self.best[(split - 1) as usize];
        determined.saturating_add(free)
    }
}

/// Precomputed flow tables for a network.
#[derive(Clone, Debug)]
pub struct Relaxation {
    inflow: Vec<Option<FlowTable>>,
    outflow: Vec<Option<FlowTable>>,
}

impl Relaxation {
    pub fn new(net: &Network) -> Self {
        let build = |rates: &Option<PhaseRates>| rates.as_ref().map(|r| FlowTable::build(net, r));
        Relaxation {
            inflow: net.inflow.iter().map(build).collect(),
            outflow: net.outflow.iter().map(build).collect(),
        }
    }

    /// Upper bounds given a state exact through tick `state.t`. `configs` is
    /// the configuration of every junction after the decided prefix and
    /// `open[g]` the first tick from which junction `g` is undecided
    /// (`u32::MAX` when fully decided).
    pub(crate) fn node_bound(
        &self,
        problem: &SearchProblem,
        state: &CorridorState,
        configs: &[usize],
        open: &[u32],
    ) -> NodeBound {
        let net = &problem.network;
        let (s, h) = (state.t, net.horizon);
        let flow = |table: &Option<FlowTable>| {
            table
                .as_ref()
                .map_or(0, |f| f.bound(s, h, configs[f.junction], open[f.junction]))
        };
        let counter_ub = |l: usize| i128::from(state.counter[l].unwrap_or_default().scaled()) + i128::from(flow(&self.inflow[l]));
        let tiers = problem
            .resolved
            .tiers
            .iter()
            .map(|tier| {
                let total: i128 = tier
                    .iter()
                    .flat_map(|term| term.links.iter().map(move |&l| (term, l)))
                    .map(|(term, l)| match (term.quantity, term.sign > 0) {
                        (Quantity::Counter, true) => counter_ub(l),
                        (Quantity::Counter, false) => -i128::from(state.counter[l].unwrap_or_default().scaled()),
                        (Quantity::Occupancy, true) => {
                            i128::from(state.increments[l].unwrap_or_default().scaled())
                                + i128::from(flow(&self.inflow[l]))
                        }
                        (Quantity::Occupancy, false) => {
                            -i128::from(state.increments[l].unwrap_or_default().scaled())
                                + i128::from(flow(&self.outflow[l]))
                        }
                    })
                    .sum();
                Pcu::from_scaled(total.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64)
            })
            .collect();
        let bound = i128::from(problem.bound.scaled());
        let bound_possible = net.goal_links.iter().all(|&l| counter_ub(l) >= bound);
        let baseline_possible = problem.baseline.is_none()
            || problem.baseline_links.iter().map(|&l| counter_ub(l)).sum::<i128>() > problem.baseline_sum;
        NodeBound {
            value: ObjectiveValue(tiers),
            feasible: bound_possible && baseline_possible,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct NodeBound {
    pub value: ObjectiveValue,
    /// False when no completion can meet the bound or beat the baseline.
    pub feasible: bool,
}

/// First tick from which each junction is undecided once decisions
/// `0..decided` are fixed.
pub(crate) fn open_ticks(net: &Network, decided: usize) -> Vec<u32> {
    let mut open = vec![u32::MAX; net.groups.len()];
    for d in net.decisions.iter().skip(decided) {
        if open[d.junction] == u32::MAX {
            open[d.junction] = d.time;
        }
    }
    open
}

/// Upper bound on the objective of every completion of `prefix`: the prefix
/// is simulated exactly up to the tick before the next decision (to the
/// horizon for a full plan) and the remainder relaxed.
pub fn admissible_bound(problem: &SearchProblem, prefix: &[usize]) -> Result<ObjectiveValue, SearchError> {
    let net = &problem.network;
    let relax = Relaxation::new(net);
    let mut state = CorridorState::initial(net, &problem.resolved.tracked);
    let mut configs: Vec<usize> = net.groups.iter().map(|g| g.initial_config).collect();
    let mut scratch = Default::default();
    let stop = net.decisions.get(prefix.len()).map_or(net.horizon, |d| d.time - 1);
    for (d, &c) in net.decisions.iter().zip(prefix) {
        crate::flow::advance(net, &configs, &mut state, d.time - 1, &mut scratch, |_| {})?;
        configs[d.junction] = c;
    }
    crate::flow::advance(net, &configs, &mut state, stop, &mut scratch, |_| {})?;
    let open = open_ticks(net, prefix.len());
    Ok(relax.node_bound(problem, &state, &configs, &open).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Objective;
    use crate::search::{enumerate_all, fixtures};

    #[test]
    fn full_prefix_is_exact() {
        let p = SearchProblem::new(fixtures::two_config(), Objective::default()).unwrap();
        let choices = p.network.identity_choices();
        let exact = p.resolved.evaluate(&p.simulate(&choices).unwrap().counter, &[]);
        assert_eq!(admissible_bound(&p, &choices).unwrap(), exact);
    }

    #[test]
    fn zero_rates_give_initial_counters() {
        let mut inst = fixtures::two_config();
        inst.turn_rates.map_rates(|_| Pcu::ZERO);
        for l in inst.links.values_mut() {
            if l.initial_counter.is_some() {
                l.initial_counter = Some(Pcu::from_units(3));
            }
        }
        let p = SearchProblem::new(inst, Objective::default()).unwrap();
        assert_eq!(admissible_bound(&p, &[]).unwrap(), ObjectiveValue(vec![Pcu::from_units(6)]));
    }

    #[test]
    fn root_bound_dominates_optimum() {
        let p = SearchProblem::new(fixtures::two_config(), Objective::default()).unwrap();
        let best = enumerate_all(&p).unwrap().value.unwrap();
        assert!(admissible_bound(&p, &[]).unwrap() >= best);
    }
}
