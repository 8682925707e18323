//! Serial execution of client transactions: every external read returns a
//! value picked at random among those the isolation level allows.

mod program;
mod run;
mod shared;
mod store;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::history::{HistoryError, SessionId, TxnId};
use crate::isolation::IsolationLevel;
use crate::value::{Key, Value};

pub use program::{Assertion, Expr, InitSpec, Instr, Program, Scope};
pub use run::{effective_config, execute, execute_with, run_program, Execution};
pub use shared::{SharedSession, SharedStore};
pub use store::{Kv, SessionRef, Store, TxnControl};

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub level: IsolationLevel,
    pub seed: u64,
    /// Narrow read candidates to the latest valid write of each session.
    pub latest_per_session: bool,
    /// Upper bound of the random sleep before a shared-store `begin`.
    pub delay_max_ms: u64,
    pub default_value: Value,
    pub initial_values: BTreeMap<Key, Value>,
}

impl StoreConfig {
    pub fn new(level: impl Into<IsolationLevel>) -> Self {
        StoreConfig {
            level: level.into(),
            seed: 0,
            latest_per_session: false,
            delay_max_ms: 0,
            default_value: Value::Int(0),
            initial_values: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_latest_per_session(mut self, on: bool) -> Self {
        self.latest_per_session = on;
        self
    }

    pub fn with_default(mut self, value: Value) -> Self {
        self.default_value = value;
        self
    }

    pub fn with_delay_ms(mut self, ms: u64) -> Self {
        self.delay_max_ms = ms;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("session {0} already has a live transaction")]
    LiveTransactionExists(SessionId),
    #[error("session {0} has no live transaction")]
    NoLiveTransaction(SessionId),
    #[error("no valid write for {key} in {txn}")]
    InternalNoCandidate { txn: TxnId, key: Key },
    #[error("key expression evaluated to an empty key")]
    InvalidKey,
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("timed out waiting for the store lock")]
    BeginTimeout,
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// Source of the nondeterministic choices made during execution: which
/// session runs next and which write a read observes.
pub trait Chooser: Send {
    /// Picks an index in `0..n`; `n` is at least 1.
    fn choose(&mut self, n: usize) -> usize;
}

/// Uniform choices from a seeded generator.
pub struct RandomChooser(ChaCha8Rng);

impl RandomChooser {
    pub fn seeded(seed: u64) -> Self {
        RandomChooser(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for RandomChooser {
    fn choose(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}
