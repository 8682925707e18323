//! Oracles and harnesses for testing the store: exhaustive enumeration
//! under both semantics, coverage of client-observable states, random
//! inputs and the microbenchmark programs.

pub mod bench;
pub mod canonical;
pub mod enumerate;
pub mod gen;
pub mod tables;

use std::collections::BTreeSet;

use crate::history::History;
use crate::value::Value;

pub use canonical::{CanonicalHistory, HistorySet};
pub use enumerate::{
    baseline_enumerate, baseline_enumerate_with, serial_enumerate, serial_enumerate_with, serial_explore,
    EnumError, DEFAULT_NODE_CAP,
};

/// Values returned by the external reads of `h`, by session, then
/// transaction, then program order.
pub fn observable(h: &History) -> Vec<Value> {
    CanonicalHistory::of(h).observable()
}

/// Number of distinct observable states.
pub fn coverage<I: IntoIterator<Item = Vec<Value>>>(states: I) -> usize {
    states.into_iter().collect::<BTreeSet<_>>().len()
}
