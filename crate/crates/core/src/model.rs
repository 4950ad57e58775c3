//! Corridor domain types and structural validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::pcu::{Capacity, Pcu};

/// Default number of cycles a configuration must persist before it may change.
pub const DEFAULT_STABILITY: u32 = 4;

/// Default simulated horizon in seconds when an instance does not set one.
pub const DEFAULT_HORIZON: u32 = 900;

macro_rules! ident_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Self {
                $name(name.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

ident_newtype!(
    /// Junction identifier. Link endpoints that are not declared junctions
    /// are corridor boundaries.
    JunctionId
);
ident_newtype!(ConfigId);

/// A directed road link `link(from, label, to)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId {
    pub from: JunctionId,
    pub label: String,
    pub to: JunctionId,
}

impl LinkId {
    pub fn new(from: impl Into<String>, label: impl Into<String>, to: impl Into<String>) -> Self {
        LinkId {
            from: JunctionId::new(from),
            label: label.into(),
            to: JunctionId::new(to),
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "link({},{},{})", self.from, self.label, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is not of the form link(FROM,LABEL,TO)")]
pub struct LinkIdError(pub String);

impl FromStr for LinkId {
    type Err = LinkIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LinkIdError(s.to_string());
        let inner = s
            .trim()
            .strip_prefix("link(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(err)?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b, c] if !a.is_empty() && !b.is_empty() && !c.is_empty() => {
                Ok(LinkId::new(*a, *b, *c))
            }
            _ => Err(err()),
        }
    }
}

impl Serialize for LinkId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseKind {
    Stage,
    Intergreen,
}

impl PhaseKind {
    pub fn functor(self) -> &'static str {
        match self {
            PhaseKind::Stage => "stage",
            PhaseKind::Intergreen => "inter",
        }
    }
}

/// `stage(J,N)` or `inter(J,N)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseId {
    pub junction: JunctionId,
    pub kind: PhaseKind,
    pub index: u32,
}

impl PhaseId {
    pub fn stage(junction: impl Into<String>, index: u32) -> Self {
        PhaseId {
            junction: JunctionId::new(junction),
            kind: PhaseKind::Stage,
            index,
        }
    }

    pub fn inter(junction: impl Into<String>, index: u32) -> Self {
        PhaseId {
            junction: JunctionId::new(junction),
            kind: PhaseKind::Intergreen,
            index,
        }
    }

    pub fn is_stage(&self) -> bool {
        self.kind == PhaseKind::Stage
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.kind.functor(), self.junction, self.index)
    }
}

/// One cycle definition: phases in cycle order with durations in seconds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub id: ConfigId,
    pub junction: JunctionId,
    pub phases: Vec<(PhaseId, u32)>,
}

impl Configuration {
    pub fn duration_of(&self, phase: &PhaseId) -> Option<u32> {
        self.phases
            .iter()
            .find(|(p, _)| p == phase)
            .map(|&(_, d)| d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub capacity: Capacity,
    pub initial_occ: Pcu,
    /// Present exactly for goal links.
    pub initial_counter: Option<Pcu>,
}

impl Link {
    pub fn new(id: LinkId) -> Self {
        Link {
            id,
            capacity: Capacity::Unbounded,
            initial_occ: Pcu::ZERO,
            initial_counter: None,
        }
    }

    pub fn is_goal(&self) -> bool {
        self.initial_counter.is_some()
    }
}

/// PCU per second moving between two links while a stage is green.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TurnRateTable {
    entries: BTreeMap<(PhaseId, LinkId, LinkId), Pcu>,
}

impl TurnRateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous rate for the same key, if any.
    pub fn insert(&mut self, stage: PhaseId, from: LinkId, to: LinkId, rate: Pcu) -> Option<Pcu> {
        self.entries.insert((stage, from, to), rate)
    }

    /// Absent keys (including every intergreen) are zero.
    pub fn rate(&self, stage: &PhaseId, from: &LinkId, to: &LinkId) -> Pcu {
        self.entries
            .get(&(stage.clone(), from.clone(), to.clone()))
            .copied()
            .unwrap_or(Pcu::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PhaseId, &LinkId, &LinkId, Pcu)> {
        self.entries.iter().map(|((s, a, b), r)| (s, a, b, *r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn map_rates(&mut self, mut f: impl FnMut(Pcu) -> Pcu) {
        for rate in self.entries.values_mut() {
            *rate = f(*rate);
        }
    }
}

/// Signal status of a junction at time 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialSignal {
    pub phase: PhaseId,
    /// Seconds the phase has already been active.
    pub elapsed: u32,
    pub config: ConfigId,
    /// Completed cycles since the configuration last changed.
    pub completed_cycles: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Junction {
    pub id: JunctionId,
    pub controllable: bool,
    /// Phase order of one cycle; shared by every configuration.
    pub phases: Vec<PhaseId>,
    pub configurations: BTreeMap<ConfigId, Configuration>,
    pub initial: InitialSignal,
    /// Cycles a configuration must persist before it may change.
    pub stability: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub junctions: BTreeMap<JunctionId, Junction>,
    pub links: BTreeMap<LinkId, Link>,
    pub turn_rates: TurnRateTable,
    pub horizon: u32,
    /// Minimum counter every goal link must reach at the horizon.
    pub bound: Pcu,
}

impl Default for Instance {
    fn default() -> Self {
        Instance {
            junctions: BTreeMap::new(),
            links: BTreeMap::new(),
            turn_rates: TurnRateTable::new(),
            horizon: DEFAULT_HORIZON,
            bound: Pcu::ZERO,
        }
    }
}

impl Instance {
    pub fn goal_links(&self) -> impl Iterator<Item = &Link> {
        self.links.values().filter(|l| l.is_goal())
    }

    pub fn set_stability(&mut self, k: u32) {
        for j in self.junctions.values_mut() {
            j.stability = k;
        }
    }
}

/// A structural defect of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    NoConfigurations {
        junction: JunctionId,
    },
    EmptyCycle {
        junction: JunctionId,
    },
    ForeignPhase {
        junction: JunctionId,
        phase: PhaseId,
    },
    NotAlternating {
        junction: JunctionId,
        phase: PhaseId,
    },
    EndsWithStage {
        junction: JunctionId,
    },
    PhaseOrder {
        junction: JunctionId,
        config: ConfigId,
    },
    ZeroDuration {
        config: ConfigId,
        phase: PhaseId,
    },
    CycleLengthMismatch {
        junction: JunctionId,
        config: ConfigId,
        expected: u32,
        found: u32,
    },
    InitialConfigUnavailable {
        junction: JunctionId,
        config: ConfigId,
    },
    InitialPhaseNotInConfig {
        junction: JunctionId,
        phase: PhaseId,
        config: ConfigId,
    },
    InitialElapsedTooLong {
        junction: JunctionId,
        elapsed: u32,
        duration: u32,
    },
    ZeroStability {
        junction: JunctionId,
    },
    NegativeCapacity {
        link: LinkId,
    },
    NegativeOccupancy {
        link: LinkId,
        occ: Pcu,
    },
    OccupancyAboveCapacity {
        link: LinkId,
        occ: Pcu,
        capacity: Pcu,
    },
    NegativeTurnRate {
        stage: PhaseId,
        from: LinkId,
        to: LinkId,
    },
    TurnRateUnknownLink {
        stage: PhaseId,
        link: LinkId,
    },
    TurnRateUnknownPhase {
        stage: PhaseId,
    },
    TurnRateOnIntergreen {
        phase: PhaseId,
    },
    TurnRateDisconnected {
        stage: PhaseId,
        from: LinkId,
        to: LinkId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoConfigurations { junction } => write!(f, "{junction}: no available configuration"),
            EmptyCycle { junction } => write!(f, "{junction}: cycle has no phases"),
            ForeignPhase { junction, phase } => {
                write!(f, "{junction}: phase {phase} belongs to another junction")
            }
            NotAlternating { junction, phase } => write!(
                f,
                "{junction}: stages and intergreens do not alternate at {phase}"
            ),
            EndsWithStage { junction } => {
                write!(f, "{junction}: cycle does not end with an intergreen")
            }
            PhaseOrder { junction, config } => write!(
                f,
                "{junction}: configuration {config} does not follow the junction's phase order"
            ),
            ZeroDuration { config, phase } => {
                write!(f, "{config}: phase {phase} has zero duration")
            }
            CycleLengthMismatch {
                junction,
                config,
                expected,
                found,
            } => write!(
                f,
                "{junction}/{config}: cycle lengths differ: {expected} vs {found}"
            ),
            InitialConfigUnavailable { junction, config } => write!(
                f,
                "{junction}: initial configuration {config} is not available"
            ),
            InitialPhaseNotInConfig {
                junction,
                phase,
                config,
            } => write!(
                f,
                "{junction}: initial phase {phase} is not part of {config}"
            ),
            InitialElapsedTooLong {
                junction,
                elapsed,
                duration,
            } => write!(
                f,
                "{junction}: initial elapsed time {elapsed} s not below phase duration {duration} s"
            ),
            ZeroStability { junction } => write!(f, "{junction}: stability k must be at least 1"),
            NegativeCapacity { link } => write!(f, "{link}: negative capacity"),
            NegativeOccupancy { link, occ } => write!(f, "{link}: negative initial occupancy {occ}"),
            OccupancyAboveCapacity {
                link,
                occ,
                capacity,
            } => write!(
                f,
                "{link}: initial occupancy {occ} exceeds capacity {capacity}"
            ),
            NegativeTurnRate { stage, from, to } => {
                write!(f, "turn rate {stage} {from} -> {to} is negative")
            }
            TurnRateUnknownLink { stage, link } => {
                write!(f, "turn rate for {stage} references unknown {link}")
            }
            TurnRateUnknownPhase { stage } => {
                write!(f, "turn rate references undeclared phase {stage}")
            }
            TurnRateOnIntergreen { phase } => {
                write!(f, "turn rate declared for intergreen {phase}")
            }
            TurnRateDisconnected { stage, from, to } => write!(
                f,
                "turn rate {stage} {from} -> {to} does not pass through {}",
                stage.junction
            ),
        }
    }
}

/// Returns every structural violation of `instance`, sorted and deduplicated.
pub fn validate(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    for junction in instance.junctions.values() {
        validate_junction(junction, &mut out);
    }
    for link in instance.links.values() {
        if let Capacity::Bounded(cap) = link.capacity {
            if cap.is_negative() {
                out.push(Violation::NegativeCapacity {
                    link: link.id.clone(),
                });
            } else if link.initial_occ > cap {
                out.push(Violation::OccupancyAboveCapacity {
                    link: link.id.clone(),
                    occ: link.initial_occ,
                    capacity: cap,
                });
            }
        }
        if link.initial_occ.is_negative() {
            out.push(Violation::NegativeOccupancy {
                link: link.id.clone(),
                occ: link.initial_occ,
            });
        }
    }
    for (stage, from, to, rate) in instance.turn_rates.iter() {
        if rate.is_negative() {
            out.push(Violation::NegativeTurnRate {
                stage: stage.clone(),
                from: from.clone(),
                to: to.clone(),
            });
        }
        if !stage.is_stage() {
            out.push(Violation::TurnRateOnIntergreen {
                phase: stage.clone(),
            });
        }
        let known_phase = instance
            .junctions
            .get(&stage.junction)
            .is_some_and(|j| j.phases.contains(stage));
        if !known_phase {
            out.push(Violation::TurnRateUnknownPhase {
                stage: stage.clone(),
            });
        }
        for link in [from, to] {
            if !instance.links.contains_key(link) {
                out.push(Violation::TurnRateUnknownLink {
                    stage: stage.clone(),
                    link: link.clone(),
                });
            }
        }
        if from.to != stage.junction || to.from != stage.junction {
            out.push(Violation::TurnRateDisconnected {
                stage: stage.clone(),
                from: from.clone(),
                to: to.clone(),
            });
        }
    }
    out.sort();
    out.dedup();
    out
}

fn validate_junction(junction: &Junction, out: &mut Vec<Violation>) {
    let jid = &junction.id;
    if junction.stability == 0 {
        out.push(Violation::ZeroStability {
            junction: jid.clone(),
        });
    }
    if junction.phases.is_empty() {
        out.push(Violation::EmptyCycle {
            junction: jid.clone(),
        });
    }
    for (i, phase) in junction.phases.iter().enumerate() {
        if &phase.junction != jid {
            out.push(Violation::ForeignPhase {
                junction: jid.clone(),
                phase: phase.clone(),
            });
        }
        let expected = if i % 2 == 0 {
            PhaseKind::Stage
        } else {
            PhaseKind::Intergreen
        };
        if phase.kind != expected {
            out.push(Violation::NotAlternating {
                junction: jid.clone(),
                phase: phase.clone(),
            });
        }
    }
    if junction.phases.last().is_some_and(PhaseId::is_stage) {
        out.push(Violation::EndsWithStage {
            junction: jid.clone(),
        });
    }
    if junction.configurations.is_empty() {
        out.push(Violation::NoConfigurations {
            junction: jid.clone(),
        });
    }
    let mut reference: Option<u32> = None;
    for config in junction.configurations.values() {
        let order_matches = config.phases.len() == junction.phases.len()
            && config
                .phases
                .iter()
                .zip(&junction.phases)
                .all(|((p, _), q)| p == q);
        if !order_matches || &config.junction != jid {
            out.push(Violation::PhaseOrder {
                junction: jid.clone(),
                config: config.id.clone(),
            });
        }
        for (phase, d) in &config.phases {
            if *d == 0 {
                out.push(Violation::ZeroDuration {
                    config: config.id.clone(),
                    phase: phase.clone(),
                });
            }
        }
        let total: u32 = config.phases.iter().map(|&(_, d)| d).sum();
        match reference {
            None => reference = Some(total),
            Some(expected) if expected != total => out.push(Violation::CycleLengthMismatch {
                junction: jid.clone(),
                config: config.id.clone(),
                expected,
                found: total,
            }),
            Some(_) => {}
        }
    }
    let initial = &junction.initial;
    match junction.configurations.get(&initial.config) {
        None => out.push(Violation::InitialConfigUnavailable {
            junction: jid.clone(),
            config: initial.config.clone(),
        }),
        Some(config) => match config.duration_of(&initial.phase) {
            None => out.push(Violation::InitialPhaseNotInConfig {
                junction: jid.clone(),
                phase: initial.phase.clone(),
                config: config.id.clone(),
            }),
            Some(duration) if initial.elapsed >= duration => {
                out.push(Violation::InitialElapsedTooLong {
                    junction: jid.clone(),
                    elapsed: initial.elapsed,
                    duration,
                })
            }
            Some(_) => {}
        },
    }
}
