//! Trace-level invariants of the flow model; each check returns the list
//! of violations found.

use signalopt::flow::{active_phases, simulate, tick_delta, tick_transfers, Trace};
use signalopt::model::Instance;
use signalopt::network::Network;
use signalopt::pcu::Pcu;
use signalopt::timeline::{active_state, SignalPlan};

/// Configuration index of every group at every tick.
pub fn configs_per_tick(inst: &Instance, net: &Network, plan: &SignalPlan) -> Vec<Vec<usize>> {
    (0..=inst.horizon)
        .map(|t| {
            active_state(inst, plan, t)
                .unwrap()
                .iter()
                .map(|s| {
                    let g = &net.groups[net.group_index[&s.junction]];
                    g.config_index(&s.config).unwrap()
                })
                .collect()
        })
        .collect()
}

pub fn counter_monotone(trace: &Trace) -> Vec<String> {
    let mut out = Vec::new();
    for w in trace.states.windows(2) {
        for (l, (a, b)) in w[0].counter.iter().zip(&w[1].counter).enumerate() {
            if let (Some(a), Some(b)) = (a, b) {
                if b < a {
                    out.push(format!("counter of {} fell at t={}", trace.links[l], w[1].t));
                }
            }
        }
    }
    out
}

/// Every transfer leaves one link and enters another in the same amount,
/// and each link's per-tick delta is exactly its transfers' balance.
pub fn pairwise_conservation(inst: &Instance, net: &Network, plan: &SignalPlan, trace: &Trace) -> Vec<String> {
    let configs = configs_per_tick(inst, net, plan);
    let mut out = Vec::new();
    for t in 1..trace.states.len() {
        let prev = &trace.states[t - 1];
        let cur = &trace.states[t];
        let phases = active_phases(net, &configs[t], t as u32);
        let transfers = tick_transfers(net, &phases, prev);
        for l in 0..net.link_count() {
            let into: i128 = transfers.iter().filter(|x| x.to == l).map(|x| i128::from(x.amount.scaled())).sum();
            let from: i128 = transfers.iter().filter(|x| x.from == l).map(|x| i128::from(x.amount.scaled())).sum();
            let d = tick_delta(net, &phases, prev, l);
            if i128::from(d.delta_in.scaled()) != into || i128::from(d.delta_out.scaled()) != from {
                out.push(format!("t={t} {}: delta disagrees with transfers", net.links[l]));
            }
            let change = i128::from(cur.occ[l].scaled()) - i128::from(prev.occ[l].scaled());
            if change != into - from {
                out.push(format!("t={t} {}: occupancy change {change} != {}", net.links[l], into - from));
            }
        }
        let total_prev: i128 = prev.occ.iter().map(|o| i128::from(o.scaled())).sum();
        let total_cur: i128 = cur.occ.iter().map(|o| i128::from(o.scaled())).sum();
        if total_prev != total_cur {
            out.push(format!("t={t}: total occupancy {total_prev} -> {total_cur}"));
        }
    }
    out
}

/// Largest one-tick inflow and outflow of every link.
pub fn one_tick_flow(net: &Network) -> (Vec<i64>, Vec<i64>) {
    let max = |rates: &Option<signalopt::network::PhaseRates>| {
        rates.as_ref().map_or(0, |r| r.by_phase.iter().copied().max().unwrap_or(0))
    };
    (net.inflow.iter().map(max).collect(), net.outflow.iter().map(max).collect())
}

/// -eps(L) <= occ <= capacity + eps(L), eps being one tick's worth of flow.
pub fn bounded_excursion(net: &Network, trace: &Trace) -> Vec<String> {
    let (inflow, outflow) = one_tick_flow(net);
    let mut out = Vec::new();
    for s in &trace.states {
        for l in 0..net.link_count() {
            let occ = s.occ[l].scaled();
            if occ < -outflow[l] {
                out.push(format!("t={} {}: occupancy {occ} below -{}", s.t, net.links[l], outflow[l]));
            }
            if let Some(cap) = net.capacity[l] {
                if occ > cap + inflow[l] {
                    out.push(format!("t={} {}: occupancy {occ} above {cap}+{}", s.t, net.links[l], inflow[l]));
                }
            }
        }
    }
    out
}

pub fn scaled_instance(inst: &Instance, m: i64) -> Instance {
    let mut scaled = inst.clone();
    let mul = |p: Pcu| p.checked_mul_int(m).expect("scaling stays in range");
    for l in scaled.links.values_mut() {
        if let signalopt::pcu::Capacity::Bounded(c) = &mut l.capacity {
            *c = mul(*c);
        }
        l.initial_occ = mul(l.initial_occ);
        l.initial_counter = l.initial_counter.map(mul);
    }
    scaled.turn_rates.map_rates(mul);
    scaled.bound = mul(scaled.bound);
    scaled
}

/// Scaling every quantity by `m` scales every traced value by `m`.
pub fn scaling_equivariance(inst: &Instance, plan: &SignalPlan, trace: &Trace, m: i64) -> Vec<String> {
    let scaled = simulate(&scaled_instance(inst, m), plan).unwrap();
    let mut out = Vec::new();
    for (a, b) in trace.states.iter().zip(&scaled.states) {
        let times = |x: &Pcu| x.checked_mul_int(m).unwrap();
        let occ_ok = a.occ.iter().map(times).eq(b.occ.iter().copied());
        let counter_ok = a.counter.iter().map(|c| c.as_ref().map(times)).eq(b.counter.iter().copied());
        let inc_ok = a.increments.iter().map(|c| c.as_ref().map(times)).eq(b.increments.iter().copied());
        if !(occ_ok && counter_ok && inc_ok) {
            out.push(format!("t={}: scaling by {m} not equivariant", a.t));
        }
    }
    out
}
