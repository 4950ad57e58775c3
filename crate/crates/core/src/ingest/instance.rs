//! Interpretation of a [`FactFile`] over the corridor vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use thiserror::Error;

use super::facts::{parse_facts, Fact, FactFile, Position, SyntaxError, Term};
use crate::model::{
    Configuration, ConfigId, InitialSignal, Instance, Junction, JunctionId, Link, LinkId, PhaseId,
    PhaseKind, DEFAULT_HORIZON, DEFAULT_STABILITY,
};
use crate::pcu::{pcu_from_decimal, Capacity, Pcu};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Read PCU quantities as decimals (`12.5`) instead of scaled integers.
    pub decimal_input: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub pos: Position,
    pub message: String,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: {message}")]
    Semantic { pos: Position, message: String },
    #[error("{0}")]
    Missing(String),
}

#[derive(Clone, Debug)]
pub struct ParsedInstance {
    pub instance: Instance,
    pub warnings: Vec<Warning>,
}

fn semantic<T>(pos: Position, message: impl Into<String>) -> Result<T, IngestError> {
    Err(IngestError::Semantic {
        pos,
        message: message.into(),
    })
}

pub(crate) fn ident(term: &Term, pos: Position) -> Result<String, IngestError> {
    match term {
        Term::Symbol(s) => Ok(s.clone()),
        Term::Int(i) => Ok(i.to_string()),
        other => semantic(pos, format!("expected an identifier, found `{other}`")),
    }
}

fn natural(term: &Term, pos: Position, what: &str) -> Result<u32, IngestError> {
    match term {
        Term::Int(i) => u32::try_from(*i)
            .or_else(|_| semantic(pos, format!("{what} must be a non-negative integer, found {i}"))),
        other => semantic(pos, format!("{what} must be an integer, found `{other}`")),
    }
}

pub(crate) fn pcu(term: &Term, pos: Position, options: ParseOptions) -> Result<Pcu, IngestError> {
    match (term, options.decimal_input) {
        (Term::Int(i), false) => Ok(Pcu::from_scaled(*i)),
        (Term::Int(_) | Term::Decimal(_), true) => pcu_from_decimal(&term.to_string())
            .or_else(|e| semantic(pos, format!("invalid PCU value `{term}`: {e}"))),
        (Term::Decimal(d), false) => semantic(
            pos,
            format!("decimal `{d}` requires decimal input; quantities are scaled integers"),
        ),
        (other, _) => semantic(pos, format!("expected a PCU quantity, found `{other}`")),
    }
}

fn phase(term: &Term, pos: Position) -> Result<PhaseId, IngestError> {
    if let Term::Compound(f, args) = term {
        let kind = match f.as_str() {
            "stage" => Some(PhaseKind::Stage),
            "inter" => Some(PhaseKind::Intergreen),
            _ => None,
        };
        if let (Some(kind), [j, n]) = (kind, args.as_slice()) {
            let index = natural(n, pos, "phase index")?;
            if index == 0 {
                return semantic(pos, format!("phase index must be positive in `{term}`"));
            }
            return Ok(PhaseId {
                junction: JunctionId::new(ident(j, pos)?),
                kind,
                index,
            });
        }
    }
    semantic(pos, format!("expected stage(J,N) or inter(J,N), found `{term}`"))
}

/// Link terms are `link(J1,ID,J2)`; a bare label naming exactly one declared link is accepted too.
pub(crate) fn link_ref(
    term: &Term,
    pos: Position,
    declared: &BTreeMap<LinkId, Position>,
) -> Result<LinkId, IngestError> {
    let id = match term {
        Term::Compound(f, args) if f == "link" && args.len() == 3 => LinkId::new(
            ident(&args[0], pos)?,
            ident(&args[1], pos)?,
            ident(&args[2], pos)?,
        ),
        Term::Symbol(label) => {
            let mut matches = declared.keys().filter(|l| &l.label == label);
            match (matches.next(), matches.next()) {
                (Some(l), None) => l.clone(),
                (Some(_), Some(_)) => {
                    return semantic(pos, format!("link label `{label}` is ambiguous"))
                }
                (None, _) => return semantic(pos, format!("unknown link `{label}`")),
            }
        }
        other => return semantic(pos, format!("expected link(J1,ID,J2), found `{other}`")),
    };
    if !declared.contains_key(&id) {
        return semantic(pos, format!("link {id} is not declared by a link/3 fact"));
    }
    Ok(id)
}

/// Keyed single-valued facts; a second different value is a contradiction.
struct Assignments<K, V> {
    what: &'static str,
    map: BTreeMap<K, (V, Position)>,
}

impl<K: Ord + Debug, V: PartialEq + Debug> Assignments<K, V> {
    fn new(what: &'static str) -> Self {
        Assignments {
            what,
            map: BTreeMap::new(),
        }
    }

    fn set(&mut self, key: K, value: V, pos: Position) -> Result<(), IngestError> {
        if let Some((old, old_pos)) = self.map.get(&key) {
            if *old != value {
                return semantic(
                    pos,
                    format!(
                        "contradictory {} facts for {key:?}: {old:?} (at {old_pos}) and {value:?}",
                        self.what
                    ),
                );
            }
            return Ok(());
        }
        self.map.insert(key, (value, pos));
        Ok(())
    }

    fn get(&self, key: &K) -> Option<&V> {
        self.map.get(key).map(|(v, _)| v)
    }
}

fn arity(fact: &Fact, n: usize) -> Result<(), IngestError> {
    if fact.args.len() != n {
        return semantic(
            fact.pos,
            format!(
                "{} expects {n} arguments, found {}",
                fact.predicate,
                fact.args.len()
            ),
        );
    }
    Ok(())
}

fn time_zero(term: &Term, pos: Position, predicate: &str) -> Result<(), IngestError> {
    match term {
        Term::Int(0) => Ok(()),
        other => semantic(pos, format!("{predicate} describes time 0 only, found time `{other}`")),
    }
}

/// Parses an instance whose PCU quantities are scaled integers.
pub fn parse_instance(text: &str) -> Result<Instance, IngestError> {
    parse_instance_with(text, ParseOptions::default()).map(|p| p.instance)
}

pub fn parse_instance_with(text: &str, options: ParseOptions) -> Result<ParsedInstance, IngestError> {
    let file = parse_facts(text)?;
    build_instance(&file, options)
}

pub fn build_instance(file: &FactFile, options: ParseOptions) -> Result<ParsedInstance, IngestError> {
    let mut warnings = Vec::new();

    let mut horizon = DEFAULT_HORIZON;
    let mut k = DEFAULT_STABILITY;
    let mut bound = Pcu::ZERO;
    let mut seen_consts = Assignments::<String, Term>::new("#const");
    for d in &file.consts {
        seen_consts.set(d.name.clone(), d.value.clone(), d.pos)?;
        match d.name.as_str() {
            "horizon" => horizon = natural(&d.value, d.pos, "horizon")?,
            "k" => k = natural(&d.value, d.pos, "k")?,
            "bound" => bound = pcu(&d.value, d.pos, options)?,
            other => warnings.push(Warning {
                pos: d.pos,
                message: format!("unknown constant `{other}` ignored"),
            }),
        }
    }
    for (name, pos) in &file.ignored {
        warnings.push(Warning {
            pos: *pos,
            message: format!("directive #{name} ignored"),
        });
    }

    // Links first so that later facts can refer to them in any order.
    let mut links: BTreeMap<LinkId, Position> = BTreeMap::new();
    for fact in file.facts.iter().filter(|f| f.predicate == "link") {
        arity(fact, 3)?;
        let id = LinkId::new(
            ident(&fact.args[0], fact.pos)?,
            ident(&fact.args[1], fact.pos)?,
            ident(&fact.args[2], fact.pos)?,
        );
        links.entry(id).or_insert(fact.pos);
    }

    let mut controllable = BTreeSet::new();
    let mut available: BTreeMap<JunctionId, BTreeSet<ConfigId>> = BTreeMap::new();
    let mut limits = Assignments::<(PhaseId, ConfigId), u32>::new("phase_limit");
    let mut status = Assignments::<PhaseId, JunctionId>::new("status");
    let mut next: Vec<(PhaseId, PhaseId, Position)> = Vec::new();
    let mut end = Assignments::<JunctionId, PhaseId>::new("end");
    let mut capacity = Assignments::<LinkId, Pcu>::new("capacity");
    let mut occ = Assignments::<LinkId, Pcu>::new("initial_occ");
    let mut count = Assignments::<LinkId, Pcu>::new("initial_count");
    let mut rates = Assignments::<(PhaseId, LinkId, LinkId), Pcu>::new("turnrate");
    let mut active_p = Assignments::<JunctionId, PhaseId>::new("active_p");
    let mut active_t = Assignments::<JunctionId, u32>::new("active_t");
    let mut active_c = Assignments::<JunctionId, ConfigId>::new("active_c");
    let mut count_c = Assignments::<JunctionId, u32>::new("count_c");
    let mut stability = Assignments::<JunctionId, u32>::new("stability");
    let mut mentioned: BTreeSet<JunctionId> = BTreeSet::new();

    for fact in &file.facts {
        let pos = fact.pos;
        let a = &fact.args;
        match fact.predicate.as_str() {
            "link" => {}
            "controllable" => {
                arity(fact, 1)?;
                let j = JunctionId::new(ident(&a[0], pos)?);
                mentioned.insert(j.clone());
                controllable.insert(j);
            }
            "available_conf" => {
                arity(fact, 2)?;
                let j = JunctionId::new(ident(&a[0], pos)?);
                mentioned.insert(j.clone());
                available
                    .entry(j)
                    .or_default()
                    .insert(ConfigId::new(ident(&a[1], pos)?));
            }
            "phase_limit" => {
                arity(fact, 3)?;
                let p = phase(&a[0], pos)?;
                mentioned.insert(p.junction.clone());
                let c = ConfigId::new(ident(&a[1], pos)?);
                let d = natural(&a[2], pos, "phase duration")?;
                limits.set((p, c), d, pos)?;
            }
            "status" => {
                arity(fact, 2)?;
                let j = JunctionId::new(ident(&a[0], pos)?);
                let p = phase(&a[1], pos)?;
                if p.junction != j {
                    return semantic(pos, format!("status associates {p} with junction {j}"));
                }
                mentioned.insert(j.clone());
                status.set(p, j, pos)?;
            }
            "next" => {
                arity(fact, 2)?;
                // `end` as an argument marks the cycle boundary and carries no order.
                if a.iter().any(|t| matches!(t, Term::Symbol(s) if s == "end")) {
                    continue;
                }
                let p1 = phase(&a[0], pos)?;
                let p2 = phase(&a[1], pos)?;
                if p1.junction != p2.junction {
                    return semantic(pos, format!("next links phases of different junctions: {p1}, {p2}"));
                }
                mentioned.insert(p1.junction.clone());
                next.push((p1, p2, pos));
            }
            "end" => {
                arity(fact, 1)?;
                let p = phase(&a[0], pos)?;
                mentioned.insert(p.junction.clone());
                end.set(p.junction.clone(), p, pos)?;
            }
            "precedes" | "follows" => {
                arity(fact, 2)?;
                let j = JunctionId::new(ident(&a[0], pos)?);
                let l = link_ref(&a[1], pos, &links)?;
                let endpoint = if fact.predicate == "precedes" { &l.from } else { &l.to };
                if *endpoint != j {
                    return semantic(
                        pos,
                        format!("{}({j},{l}) contradicts the link's endpoints", fact.predicate),
                    );
                }
            }
            "capacity" => {
                arity(fact, 2)?;
                let l = link_ref(&a[0], pos, &links)?;
                capacity.set(l, pcu(&a[1], pos, options)?, pos)?;
            }
            "initial_occ" => {
                arity(fact, 2)?;
                let l = link_ref(&a[0], pos, &links)?;
                occ.set(l, pcu(&a[1], pos, options)?, pos)?;
            }
            "initial_count" => {
                arity(fact, 2)?;
                let l = link_ref(&a[0], pos, &links)?;
                count.set(l, pcu(&a[1], pos, options)?, pos)?;
            }
            "turnrate" => {
                arity(fact, 4)?;
                let s = phase(&a[0], pos)?;
                let l1 = link_ref(&a[1], pos, &links)?;
                let l2 = link_ref(&a[2], pos, &links)?;
                rates.set((s, l1, l2), pcu(&a[3], pos, options)?, pos)?;
            }
            "active_p" => {
                arity(fact, 2)?;
                time_zero(&a[0], pos, "active_p")?;
                let p = phase(&a[1], pos)?;
                mentioned.insert(p.junction.clone());
                active_p.set(p.junction.clone(), p, pos)?;
            }
            "active_t" | "active_c" => {
                arity(fact, 3)?;
                time_zero(&a[0], pos, &fact.predicate)?;
                let j = JunctionId::new(ident(&a[1], pos)?);
                mentioned.insert(j.clone());
                if fact.predicate == "active_t" {
                    active_t.set(j, natural(&a[2], pos, "elapsed time")?, pos)?;
                } else {
                    active_c.set(j, ConfigId::new(ident(&a[2], pos)?), pos)?;
                }
            }
            "count_c" | "stability" => {
                arity(fact, 2)?;
                let j = JunctionId::new(ident(&a[0], pos)?);
                mentioned.insert(j.clone());
                let n = natural(&a[1], pos, &fact.predicate)?;
                if fact.predicate == "count_c" {
                    count_c.set(j, n, pos)?;
                } else {
                    stability.set(j, n, pos)?;
                }
            }
            other => warnings.push(Warning {
                pos,
                message: format!("unknown predicate {other}/{} ignored", a.len()),
            }),
        }
    }

    if mentioned.is_empty() {
        return Err(IngestError::Missing("no junctions declared".into()));
    }

    for ((p, c), (_, pos)) in &limits.map {
        if !available.get(&p.junction).is_some_and(|s| s.contains(c)) {
            return semantic(
                *pos,
                format!("phase_limit for {p} names configuration {c}, which is not available at {}", p.junction),
            );
        }
    }

    let mut junctions = BTreeMap::new();
    for j in &mentioned {
        let mut phases: BTreeSet<PhaseId> = BTreeSet::new();
        phases.extend(status.map.keys().filter(|p| &p.junction == j).cloned());
        phases.extend(limits.map.keys().map(|(p, _)| p).filter(|p| &p.junction == j).cloned());
        phases.extend(next.iter().filter(|(p, _, _)| &p.junction == j).flat_map(|(a, b, _)| [a.clone(), b.clone()]));
        phases.extend(end.get(j).cloned());
        phases.extend(active_p.get(j).cloned());
        let order = phase_order(j, &phases, &next, end.get(j))?;

        let Some(configs) = available.get(j) else {
            return Err(IngestError::Missing(format!("junction {j} has no available_conf facts")));
        };
        let mut configurations = BTreeMap::new();
        for c in configs {
            let mut cycle = Vec::with_capacity(order.len());
            for p in &order {
                let Some(&d) = limits.get(&(p.clone(), c.clone())) else {
                    return Err(IngestError::Missing(format!(
                        "no phase_limit for {p} in configuration {c}"
                    )));
                };
                cycle.push((p.clone(), d));
            }
            configurations.insert(
                c.clone(),
                Configuration {
                    id: c.clone(),
                    junction: j.clone(),
                    phases: cycle,
                },
            );
        }
        let missing = |what: &str| IngestError::Missing(format!("junction {j} has no {what} fact"));
        let initial = InitialSignal {
            phase: active_p.get(j).cloned().ok_or_else(|| missing("active_p"))?,
            elapsed: *active_t.get(j).ok_or_else(|| missing("active_t"))?,
            config: active_c.get(j).cloned().ok_or_else(|| missing("active_c"))?,
            completed_cycles: count_c.get(j).copied().unwrap_or(0),
        };
        junctions.insert(
            j.clone(),
            Junction {
                id: j.clone(),
                controllable: controllable.contains(j),
                phases: order,
                configurations,
                initial,
                stability: stability.get(j).copied().unwrap_or(k),
            },
        );
    }

    let links = links
        .into_keys()
        .map(|id| {
            let mut link = Link::new(id.clone());
            if let Some(&c) = capacity.get(&id) {
                link.capacity = Capacity::Bounded(c);
            }
            if let Some(&o) = occ.get(&id) {
                link.initial_occ = o;
            }
            link.initial_counter = count.get(&id).copied();
            (id, link)
        })
        .collect();

    let mut instance = Instance {
        junctions,
        links,
        horizon,
        bound,
        ..Instance::default()
    };
    for ((s, l1, l2), (rate, _)) in rates.map {
        instance.turn_rates.insert(s, l1, l2, rate);
    }
    Ok(ParsedInstance { instance, warnings })
}

/// Orders a junction's phases by following `next` from the unique phase that
/// nothing precedes. The edge leaving the final phase (wrap-around) is ignored.
fn phase_order(
    j: &JunctionId,
    phases: &BTreeSet<PhaseId>,
    next: &[(PhaseId, PhaseId, Position)],
    end: Option<&PhaseId>,
) -> Result<Vec<PhaseId>, IngestError> {
    let mut succ: BTreeMap<&PhaseId, (&PhaseId, Position)> = BTreeMap::new();
    for (a, b, pos) in next.iter().filter(|(a, _, _)| &a.junction == j) {
        if Some(a) == end {
            continue;
        }
        if let Some((other, _)) = succ.get(a) {
            if *other != b {
                return semantic(*pos, format!("{a} has two successors: {other} and {b}"));
            }
        }
        succ.insert(a, (b, *pos));
    }
    let targets: BTreeSet<&PhaseId> = succ.values().map(|(b, _)| *b).collect();
    let firsts: Vec<&PhaseId> = phases.iter().filter(|p| !targets.contains(p)).collect();
    let first = match firsts.as_slice() {
        [one] => *one,
        [] => {
            return Err(IngestError::Missing(format!(
                "phase order of junction {j} has no first phase"
            )))
        }
        many => {
            let names: Vec<String> = many.iter().map(ToString::to_string).collect();
            return Err(IngestError::Missing(format!(
                "phase order of junction {j} is ambiguous: {} could each start the cycle",
                names.join(", ")
            )));
        }
    };
    let mut order = vec![first.clone()];
    let mut at = first;
    while let Some((b, pos)) = succ.get(at) {
        if order.contains(b) {
            return semantic(*pos, format!("phase order of junction {j} loops back to {b}"));
        }
        order.push((*b).clone());
        at = b;
    }
    if let Some(e) = end {
        if at != e {
            return Err(IngestError::Missing(format!(
                "phase order of junction {j} ends at {at}, but end/1 names {e}"
            )));
        }
    }
    if order.len() != phases.len() {
        let stray: Vec<String> = phases
            .iter()
            .filter(|p| !order.contains(p))
            .map(ToString::to_string)
            .collect();
        return Err(IngestError::Missing(format!(
            "phases {} of junction {j} are not reachable through next/2",
            stray.join(", ")
        )));
    }
    Ok(order)
}
