//! Declarative optimisation targets.
//!
//! An [`Objective`] is a list of priority tiers. Each tier sums signed
//! terms; tiers compare lexicographically, highest priority first. Terms
//! either read the counter of goal links or the net occupancy increment
//! (total PCU that entered minus total that left since time 0).
//!
//! Text syntax, used by the CLI:
//!
//! ```text
//! objective := tier ( ">" tier )*
//! tier      := term ( "+" term )*
//! term      := ("max" | "min") "-" ("counter" | "occupancy") [ "[" targets "]" ]
//! targets   := "goals" | link ( (";" | whitespace) link )*
//! ```
//!
//! A term without targets applies to all goal links.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::LinkId;
use crate::network::Network;
use crate::pcu::Pcu;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    /// Cumulative inflow of a goal link.
    Counter,
    /// Net PCU gained by a link since time 0.
    Occupancy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Targets {
    Goals,
    Links(Vec<LinkId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub sense: Sense,
    pub quantity: Quantity,
    pub targets: Targets,
}

impl Term {
    pub fn new(sense: Sense, quantity: Quantity, targets: Targets) -> Self {
        Term {
            sense,
            quantity,
            targets,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub tiers: Vec<Vec<Term>>,
}

impl Default for Objective {
    /// Maximise the summed counters of all goal links.
    fn default() -> Self {
        Objective {
            tiers: vec![vec![Term::new(
                Sense::Maximize,
                Quantity::Counter,
                Targets::Goals,
            )]],
        }
    }
}

impl Objective {
    /// Accident management: flush the links past the incident first, then
    /// hold back the links feeding it.
    pub fn flush_and_slow(flush: Vec<LinkId>, slow: Vec<LinkId>) -> Self {
        Objective {
            tiers: vec![
                vec![Term::new(
                    Sense::Maximize,
                    Quantity::Counter,
                    Targets::Links(flush),
                )],
                vec![Term::new(
                    Sense::Minimize,
                    Quantity::Counter,
                    Targets::Links(slow),
                )],
            ],
        }
    }

    pub fn resolve(&self, net: &Network) -> Result<ResolvedObjective, ObjectiveError> {
        if self.tiers.is_empty() || self.tiers.iter().any(Vec::is_empty) {
            return Err(ObjectiveError::Empty);
        }
        let mut seen: BTreeSet<(Quantity, Sense, usize)> = BTreeSet::new();
        let mut tiers = Vec::with_capacity(self.tiers.len());
        let mut tracked = BTreeSet::new();
        for tier in &self.tiers {
            let mut resolved = Vec::with_capacity(tier.len());
            for term in tier {
                let links: Vec<usize> = match &term.targets {
                    Targets::Goals => net.goal_links.clone(),
                    Targets::Links(ids) => ids
                        .iter()
                        .map(|id| {
                            net.link_index
                                .get(id)
                                .copied()
                                .ok_or_else(|| ObjectiveError::UnknownLink(id.clone()))
                        })
                        .collect::<Result<_, _>>()?,
                };
                for &l in &links {
                    if term.quantity == Quantity::Counter && net.initial_counter[l].is_none() {
                        return Err(ObjectiveError::NotGoal(net.links[l].clone()));
                    }
                    let opposite = match term.sense {
                        Sense::Maximize => Sense::Minimize,
                        Sense::Minimize => Sense::Maximize,
                    };
                    if seen.contains(&(term.quantity, opposite, l)) {
                        return Err(ObjectiveError::Conflicting {
                            link: net.links[l].clone(),
                            quantity: term.quantity,
                        });
                    }
                    seen.insert((term.quantity, term.sense, l));
                    if term.quantity == Quantity::Occupancy {
                        tracked.insert(l);
                    }
                }
                resolved.push(ResolvedTerm {
                    sign: match term.sense {
                        Sense::Maximize => 1,
                        Sense::Minimize => -1,
                    },
                    quantity: term.quantity,
                    links,
                });
            }
            tiers.push(resolved);
        }
        Ok(ResolvedObjective {
            tiers,
            tracked: tracked.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error("objective has an empty tier")]
    Empty,
    #[error("objective references unknown {0}")]
    UnknownLink(LinkId),
    #[error("{0} carries no counter (not a goal link)")]
    NotGoal(LinkId),
    #[error("{link} is both maximised and minimised on {quantity:?}")]
    Conflicting { link: LinkId, quantity: Quantity },
    #[error("cannot parse objective: {0}")]
    Syntax(String),
}

impl FromStr for Objective {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tiers = s
            .split('>')
            .map(|tier| tier.split('+').map(parse_term).collect())
            .collect::<Result<Vec<Vec<Term>>, _>>()?;
        Ok(Objective { tiers })
    }
}

fn parse_term(text: &str) -> Result<Term, ObjectiveError> {
    let text = text.trim();
    let syntax = |msg: &str| ObjectiveError::Syntax(format!("{msg} in `{text}`"));
    let (head, targets) = match text.split_once('[') {
        Some((head, rest)) => {
            let inner = rest
                .trim_end()
                .strip_suffix(']')
                .ok_or_else(|| syntax("missing `]`"))?;
            (head.trim(), parse_targets(inner)?)
        }
        None => (text, Targets::Goals),
    };
    let (sense, quantity) = head
        .split_once('-')
        .ok_or_else(|| syntax("expected SENSE-QUANTITY"))?;
    let sense = match sense {
        "max" => Sense::Maximize,
        "min" => Sense::Minimize,
        _ => return Err(syntax("sense must be `max` or `min`")),
    };
    let quantity = match quantity {
        "counter" => Quantity::Counter,
        "occupancy" => Quantity::Occupancy,
        _ => return Err(syntax("quantity must be `counter` or `occupancy`")),
    };
    Ok(Term::new(sense, quantity, targets))
}

fn parse_targets(inner: &str) -> Result<Targets, ObjectiveError> {
    let inner = inner.trim();
    if inner == "goals" {
        return Ok(Targets::Goals);
    }
    // Split on `;` or whitespace outside parentheses.
    let mut links = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in inner.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            ';' | ' ' | '\t' if depth == 0 => {
                if !current.is_empty() {
                    links.push(std::mem::take(&mut current));
                }
            }
            _ => current.push(ch),
        }
    }
    if !current.is_empty() {
        links.push(current);
    }
    if links.is_empty() {
        return Err(ObjectiveError::Syntax("empty target list".into()));
    }
    links
        .iter()
        .map(|l| {
            l.parse::<LinkId>()
                .map_err(|e| ObjectiveError::Syntax(e.to_string()))
        })
        .collect::<Result<_, _>>()
        .map(Targets::Links)
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ti, tier) in self.tiers.iter().enumerate() {
            if ti > 0 {
                f.write_str(" > ")?;
            }
            for (i, term) in tier.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                let sense = match term.sense {
                    Sense::Maximize => "max",
                    Sense::Minimize => "min",
                };
                let qty = match term.quantity {
                    Quantity::Counter => "counter",
                    Quantity::Occupancy => "occupancy",
                };
                write!(f, "{sense}-{qty}")?;
                match &term.targets {
                    Targets::Goals => f.write_str("[goals]")?,
                    Targets::Links(ls) => {
                        let names: Vec<String> = ls.iter().map(ToString::to_string).collect();
                        write!(f, "[{}]", names.join(";"))?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedTerm {
    /// +1 to maximise, -1 to minimise.
    pub sign: i64,
    pub quantity: Quantity,
    pub links: Vec<usize>,
}

/// An [`Objective`] bound to the link indices of one [`Network`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedObjective {
    pub tiers: Vec<Vec<ResolvedTerm>>,
    /// Links whose occupancy increments must be accounted for.
    pub tracked: Vec<usize>,
}

impl ResolvedObjective {
    /// Tier values from per-link counters and increments. Absent entries
    /// read as zero.
    pub fn evaluate(&self, counter: &[Option<Pcu>], increments: &[Option<Pcu>]) -> ObjectiveValue {
        let tiers = self
            .tiers
            .iter()
            .map(|tier| {
                let total: i128 = tier
                    .iter()
                    .map(|term| {
                        let source = match term.quantity {
                            Quantity::Counter => counter,
                            Quantity::Occupancy => increments,
                        };
                        let sum: i128 = term
                            .links
                            .iter()
                            .map(|&l| i128::from(source[l].unwrap_or_default().scaled()))
                            .sum();
                        sum * i128::from(term.sign)
                    })
                    .sum();
                Pcu::from_scaled(total.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64)
            })
            .collect();
        ObjectiveValue(tiers)
    }
}

/// Tier values, higher is better, compared lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ObjectiveValue(pub Vec<Pcu>);

impl ObjectiveValue {
    pub fn tiers(&self) -> &[Pcu] {
        &self.0
    }
}

impl PartialOrd for ObjectiveValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ObjectiveValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for ObjectiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|p| format!("{} ({})", p.scaled(), p))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
