//! Traffic signal plan optimisation over a corridor of signalised junctions.
//!
//! PCU quantities are exact fixed-point integers (see [`pcu`]); the simulator
//! advances one second per tick and the search engines choose a configuration
//! at every decision point of every controllable junction.

pub mod flow;
pub mod ingest;
pub mod model;
pub mod network;
pub mod objective;
pub mod pcu;
pub mod search;
pub mod timeline;

pub use flow::{simulate, CorridorState, Trace};
pub use ingest::{emit_facts, parse_baseline, parse_instance};
pub use model::{validate, Instance, LinkId, Violation};
pub use network::Network;
pub use objective::{Objective, ObjectiveValue};
pub use pcu::{pcu_from_decimal, Capacity, Pcu};
pub use timeline::SignalPlan;
