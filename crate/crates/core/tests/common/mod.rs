#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

pub mod gen;
pub mod invariants;
pub mod oracle;
pub mod reference;

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
