//! Ground fact files: parsing instances and baselines, emitting instances.
//!
//! PCU quantities in files are scaled integers (value × 100000) unless
//! decimal input is requested.

mod baseline;
mod emit;
pub mod facts;
mod instance;

pub use baseline::{parse_baseline, parse_baseline_with};
pub use emit::{emit_baseline, emit_facts, HEADER};
pub use facts::{parse_facts, Fact, FactFile, Position, SyntaxError, Term};
pub use instance::{
    build_instance, parse_instance, parse_instance_with, IngestError, ParseOptions, ParsedInstance,
    Warning,
};
