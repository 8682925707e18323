//! A mock transactional key-value store that answers reads with values
//! allowed by a weak isolation level, with an offline history checker,
//! a SQL front-end and an exhaustive test kit.

pub mod graph;
pub mod history;
pub mod isolation;
pub mod executor;
pub mod sql;
pub mod testkit;
pub mod value;

pub use history::{CommitOrder, History, HistoryError, OpId, SessionId, TxnId};
pub use isolation::{IsolationLevel, LevelKind};
pub use value::{Key, Value};
