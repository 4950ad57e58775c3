use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{Instance, LinkId};
use crate::pcu::{Capacity, Pcu};

pub const HEADER: &str = "% corridor instance; PCU quantities are scaled by 100000\n";

fn line(out: &mut String, args: std::fmt::Arguments<'_>) {
    out.write_fmt(args).expect("writing to a String");
    out.push('\n');
}

/// Renders an instance as ground facts, sorted deterministically.
pub fn emit_facts(instance: &Instance) -> String {
    let mut out = String::from(HEADER);
    if instance.junctions.is_empty() && instance.links.is_empty() && instance.turn_rates.is_empty() {
        return out;
    }
    line(&mut out, format_args!("#const horizon={}.", instance.horizon));
    // The most common stability becomes `k`; the others get stability/2 facts.
    let mut tally: BTreeMap<u32, usize> = BTreeMap::new();
    for j in instance.junctions.values() {
        *tally.entry(j.stability).or_default() += 1;
    }
    let k = tally
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, _)| k);
    if let Some(k) = k {
        line(&mut out, format_args!("#const k={k}."));
    }
    line(&mut out, format_args!("#const bound={}.", instance.bound.scaled()));

    for j in instance.junctions.values() {
        let id = &j.id;
        line(&mut out, format_args!("\n% junction {id}"));
        if j.controllable {
            line(&mut out, format_args!("controllable({id})."));
        }
        for p in &j.phases {
            line(&mut out, format_args!("status({id},{p})."));
        }
        for w in j.phases.windows(2) {
            line(&mut out, format_args!("next({},{}).", w[0], w[1]));
        }
        if let Some(last) = j.phases.last() {
            line(&mut out, format_args!("end({last})."));
        }
        for c in j.configurations.values() {
            line(&mut out, format_args!("available_conf({id},{}).", c.id));
            for (p, d) in &c.phases {
                line(&mut out, format_args!("phase_limit({p},{},{d}).", c.id));
            }
        }
        line(&mut out, format_args!("active_p(0,{}).", j.initial.phase));
        line(&mut out, format_args!("active_t(0,{id},{}).", j.initial.elapsed));
        line(&mut out, format_args!("active_c(0,{id},{}).", j.initial.config));
        line(&mut out, format_args!("count_c({id},{}).", j.initial.completed_cycles));
        if Some(j.stability) != k {
            line(&mut out, format_args!("stability({id},{}).", j.stability));
        }
    }

    if !instance.links.is_empty() {
        line(&mut out, format_args!("\n% links"));
    }
    for l in instance.links.values() {
        let id = &l.id;
        line(&mut out, format_args!("link({},{},{}).", id.from, id.label, id.to));
        line(&mut out, format_args!("precedes({},{id}).", id.from));
        line(&mut out, format_args!("follows({},{id}).", id.to));
        if let Capacity::Bounded(c) = l.capacity {
            line(&mut out, format_args!("capacity({id},{}).", c.scaled()));
        }
        line(&mut out, format_args!("initial_occ({id},{}).", l.initial_occ.scaled()));
        if let Some(c) = l.initial_counter {
            line(&mut out, format_args!("initial_count({id},{}).", c.scaled()));
        }
    }

    if !instance.turn_rates.is_empty() {
        line(&mut out, format_args!("\n% turn rates"));
    }
    for (s, from, to, rate) in instance.turn_rates.iter() {
        line(&mut out, format_args!("turnrate({s},{from},{to},{}).", rate.scaled()));
    }
    out
}

/// Renders per-link counters as `pddl_solution/2` facts.
pub fn emit_baseline(counters: &BTreeMap<LinkId, Pcu>) -> String {
    let mut out = String::new();
    for (l, c) in counters {
        line(&mut out, format_args!("pddl_solution({l},{}).", c.scaled()));
    }
    out
}
