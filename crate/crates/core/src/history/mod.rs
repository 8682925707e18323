//! Execution histories: transaction logs, session order and the write-read
//! relation.
//!
//! A [`History`] records every operation a set of client sessions issued
//! against the store. Each session is a sequence of transactions; each
//! transaction is a sequence of reads and writes in program order. Every
//! read that is not preceded by a write to the same key inside its own
//! transaction (an *external* read) is justified by exactly one committed
//! source transaction in the write-read relation.
//!
//! A distinguished initial transaction precedes every other transaction and
//! conceptually writes every key. Since the key universe is unbounded, its
//! writes are virtual: the default value, optionally overridden per key.

mod json;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{Key, Value};

pub use json::{HistoryDoc, InitDoc, OpDoc, OpTag, TxnDoc, WrDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxnId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub usize);

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    pub id: OpId,
    pub kind: OpKind,
    pub key: Key,
    pub value: Value,
}

impl Operation {
    pub fn is_read(&self) -> bool {
        self.kind == OpKind::Read
    }

    pub fn is_write(&self) -> bool {
        self.kind == OpKind::Write
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            OpKind::Read => 'r',
            OpKind::Write => 'w',
        };
        write!(f, "{kind}({},{})", self.key, self.value)
    }
}

/// A transaction identifier with its operations in program order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionLog {
    pub id: TxnId,
    pub ops: Vec<Operation>,
    pub committed: bool,
}

impl TransactionLog {
    pub fn new(id: TxnId) -> Self {
        TransactionLog {
            id,
            ops: Vec::new(),
            committed: false,
        }
    }

    /// Reads not preceded in program order by a write to the same key.
    pub fn reads(&self) -> Vec<&Operation> {
        let mut written = BTreeSet::new();
        let mut out = Vec::new();
        for op in &self.ops {
            match op.kind {
                OpKind::Write => {
                    written.insert(&op.key);
                }
                OpKind::Read if !written.contains(&op.key) => out.push(op),
                OpKind::Read => {}
            }
        }
        out
    }

    /// Writes not followed in program order by another write to the same key,
    /// in program order.
    pub fn writes(&self) -> Vec<&Operation> {
        let mut last: BTreeMap<&Key, usize> = BTreeMap::new();
        for (pos, op) in self.ops.iter().enumerate() {
            if op.is_write() {
                last.insert(&op.key, pos);
            }
        }
        let mut positions: Vec<usize> = last.into_values().collect();
        positions.sort_unstable();
        positions.into_iter().map(|p| &self.ops[p]).collect()
    }

    /// Value of the last write to `key`, if the transaction writes it.
    pub fn final_write(&self, key: &Key) -> Option<&Value> {
        self.ops
            .iter()
            .rev()
            .find(|op| op.is_write() && &op.key == key)
            .map(|op| &op.value)
    }

    pub fn writes_key(&self, key: &Key) -> bool {
        self.final_write(key).is_some()
    }

    /// Whether the read at `pos` is external (not preceded by a local write).
    pub fn is_external_read(&self, pos: usize) -> bool {
        let op = &self.ops[pos];
        op.is_read()
            && !self.ops[..pos]
                .iter()
                .any(|o| o.is_write() && o.key == op.key)
    }

    /// Checks that local reads return the last value written before them.
    pub fn is_well_formed(&self) -> bool {
        let mut current: BTreeMap<&Key, &Value> = BTreeMap::new();
        for op in &self.ops {
            match op.kind {
                OpKind::Write => {
                    current.insert(&op.key, &op.value);
                }
                OpKind::Read => {
                    if let Some(v) = current.get(&op.key) {
                        if *v != &op.value {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// A strict total order over the transactions of a history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommitOrder(pub Vec<TxnId>);

impl CommitOrder {
    pub fn positions(&self) -> BTreeMap<TxnId, usize> {
        self.0.iter().enumerate().map(|(i, t)| (*t, i)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TxnId> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("session {0} already has a live transaction")]
    LiveTransactionExists(SessionId),
    #[error("transaction {0} is not live")]
    TxnNotLive(TxnId),
    #[error("unknown transaction {0}")]
    UnknownTxn(TxnId),
    #[error("invalid write-read source: {0}")]
    InvalidSource(String),
    #[error("malformed history: {0}")]
    Malformed(String),
}

/// Transactions grouped per session, the write-read relation and the
/// initial transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct History {
    txns: BTreeMap<TxnId, TransactionLog>,
    sessions: Vec<Vec<TxnId>>,
    wr: BTreeMap<OpId, TxnId>,
    init: TxnId,
    default: Value,
    init_values: BTreeMap<Key, Value>,
    placement: BTreeMap<TxnId, (SessionId, usize)>,
    next_txn: u64,
    next_op: u64,
}

impl History {
    /// A history holding only the initial transaction, which writes
    /// `default` to every key.
    pub fn new(default: Value) -> Self {
        Self::with_initial_values(default, BTreeMap::new())
    }

    /// Like [`History::new`], with explicit initial values for some keys.
    pub fn with_initial_values(default: Value, init_values: BTreeMap<Key, Value>) -> Self {
        let init = TxnId(0);
        let mut log = TransactionLog::new(init);
        log.committed = true;
        History {
            txns: BTreeMap::from([(init, log)]),
            sessions: Vec::new(),
            wr: BTreeMap::new(),
            init,
            default,
            init_values,
            placement: BTreeMap::new(),
            next_txn: 1,
            next_op: 0,
        }
    }

    pub fn init_txn(&self) -> TxnId {
        self.init
    }

    pub fn default_value(&self) -> &Value {
        &self.default
    }

    pub fn initial_values(&self) -> &BTreeMap<Key, Value> {
        &self.init_values
    }

    /// Initial value of `key`.
    pub fn initial_value(&self, key: &Key) -> &Value {
        self.init_values.get(key).unwrap_or(&self.default)
    }

    pub fn txn(&self, id: TxnId) -> Option<&TransactionLog> {
        self.txns.get(&id)
    }

    /// All transactions, including the initial one, by id.
    pub fn txns(&self) -> impl Iterator<Item = &TransactionLog> {
        self.txns.values()
    }

    pub fn txn_ids(&self) -> Vec<TxnId> {
        self.txns.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.txns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txns.is_empty()
    }

    /// Session order: per session, its transactions in order.
    pub fn sessions(&self) -> &[Vec<TxnId>] {
        &self.sessions
    }

    pub fn session(&self, s: SessionId) -> &[TxnId] {
        self.sessions.get(s.0).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Session and position of a (non-initial) transaction.
    pub fn placement(&self, t: TxnId) -> Option<(SessionId, usize)> {
        self.placement.get(&t).copied()
    }

    /// The write-read relation as read-operation id to source transaction.
    pub fn wr(&self) -> &BTreeMap<OpId, TxnId> {
        &self.wr
    }

    pub fn wr_source(&self, read: OpId) -> Option<TxnId> {
        self.wr.get(&read).copied()
    }

    /// Value finally written to `key` by `t`; the initial transaction
    /// writes every key.
    pub fn final_write(&self, t: TxnId, key: &Key) -> Option<&Value> {
        if t == self.init {
            return Some(self.initial_value(key));
        }
        self.txns.get(&t)?.final_write(key)
    }

    pub fn writes_key(&self, t: TxnId, key: &Key) -> bool {
        self.final_write(t, key).is_some()
    }

    /// Whether `t` is committed (the initial transaction always is).
    pub fn is_committed(&self, t: TxnId) -> bool {
        self.txns.get(&t).is_some_and(|l| l.committed)
    }

    /// Live (uncommitted) transaction of a session, if any.
    pub fn live_txn(&self, s: SessionId) -> Option<TxnId> {
        let last = *self.session(s).last()?;
        (!self.txns[&last].committed).then_some(last)
    }

    /// Appends a fresh empty transaction to the session.
    pub fn begin_txn(&mut self, s: SessionId) -> Result<TxnId, HistoryError> {
        if self.live_txn(s).is_some() {
            return Err(HistoryError::LiveTransactionExists(s));
        }
        if self.sessions.len() <= s.0 {
            self.sessions.resize_with(s.0 + 1, Vec::new);
        }
        let id = TxnId(self.next_txn);
        self.next_txn += 1;
        self.txns.insert(id, TransactionLog::new(id));
        let seq = &mut self.sessions[s.0];
        self.placement.insert(id, (s, seq.len()));
        seq.push(id);
        Ok(id)
    }

    fn live_log(&mut self, t: TxnId) -> Result<&mut TransactionLog, HistoryError> {
        match self.txns.get_mut(&t) {
            None => Err(HistoryError::UnknownTxn(t)),
            Some(log) if log.committed => Err(HistoryError::TxnNotLive(t)),
            Some(log) => Ok(log),
        }
    }

    fn fresh_op(&mut self) -> OpId {
        let id = OpId(self.next_op);
        self.next_op += 1;
        id
    }

    pub fn append_write(&mut self, t: TxnId, key: Key, value: Value) -> Result<OpId, HistoryError> {
        self.live_log(t)?;
        let id = self.fresh_op();
        self.live_log(t)?.ops.push(Operation {
            id,
            kind: OpKind::Write,
            key,
            value,
        });
        Ok(id)
    }

    /// Appends a read justified by the local write to `key`; returns the
    /// read's id and value, or `None` when `t` has not written `key`.
    pub fn append_local_read(
        &mut self,
        t: TxnId,
        key: &Key,
    ) -> Result<Option<(OpId, Value)>, HistoryError> {
        let Some(value) = self.live_log(t)?.final_write(key).cloned() else {
            return Ok(None);
        };
        let id = self.fresh_op();
        self.live_log(t)?.ops.push(Operation {
            id,
            kind: OpKind::Read,
            key: key.clone(),
            value: value.clone(),
        });
        Ok(Some((id, value)))
    }

    /// Appends an external read of `key` returning `value` and records
    /// `source` as its write-read source.
    pub fn append_read(
        &mut self,
        t: TxnId,
        key: Key,
        value: Value,
        source: TxnId,
    ) -> Result<OpId, HistoryError> {
        self.check_source(t, &key, &value, source)?;
        let id = self.fresh_op();
        self.live_log(t)?.ops.push(Operation {
            id,
            kind: OpKind::Read,
            key,
            value,
        });
        self.wr.insert(id, source);
        debug_assert!(self.is_acyclic(), "so ∪ wr became cyclic");
        Ok(id)
    }

    /// Checks the preconditions of [`History::append_read`] without mutating.
    pub fn check_source(
        &self,
        t: TxnId,
        key: &Key,
        value: &Value,
        source: TxnId,
    ) -> Result<(), HistoryError> {
        let log = match self.txns.get(&t) {
            None => return Err(HistoryError::UnknownTxn(t)),
            Some(log) if log.committed => return Err(HistoryError::TxnNotLive(t)),
            Some(log) => log,
        };
        if source == t {
            return Err(HistoryError::InvalidSource(format!(
                "{t} cannot read {key} from itself"
            )));
        }
        if log.writes_key(key) {
            return Err(HistoryError::InvalidSource(format!(
                "{t} already wrote {key}; the read is local"
            )));
        }
        if !self.is_committed(source) {
            return Err(HistoryError::InvalidSource(format!(
                "{source} is not a committed transaction"
            )));
        }
        match self.final_write(source, key) {
            Some(v) if v == value => Ok(()),
            Some(v) => Err(HistoryError::InvalidSource(format!(
                "{source} wrote {key}={v}, not {value}"
            ))),
            None => Err(HistoryError::InvalidSource(format!(
                "{source} does not write {key}"
            ))),
        }
    }

    pub fn commit(&mut self, t: TxnId) -> Result<(), HistoryError> {
        self.live_log(t)?.committed = true;
        Ok(())
    }

    /// Transaction-level write-read pairs, restricted to reads of `key`
    /// when given.
    pub fn lift_wr(&self, key: Option<&Key>) -> BTreeSet<(TxnId, TxnId)> {
        let mut out = BTreeSet::new();
        for log in self.txns.values() {
            for op in log.reads() {
                if key.is_some_and(|k| k != &op.key) {
                    continue;
                }
                if let Some(src) = self.wr.get(&op.id) {
                    out.insert((*src, log.id));
                }
            }
        }
        out
    }

    /// Session order lifted to transaction pairs, including the initial
    /// transaction before every other one.
    pub fn so_pairs(&self) -> BTreeSet<(TxnId, TxnId)> {
        let mut out = BTreeSet::new();
        for seq in &self.sessions {
            for (i, a) in seq.iter().enumerate() {
                out.insert((self.init, *a));
                for b in &seq[i + 1..] {
                    out.insert((*a, *b));
                }
            }
        }
        out
    }

    /// Whether so ∪ wr, lifted to transactions, is acyclic.
    pub fn is_acyclic(&self) -> bool {
        let ids = self.txn_ids();
        let index: BTreeMap<TxnId, usize> = ids.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let mut succ = vec![Vec::new(); ids.len()];
        for seq in &self.sessions {
            for w in seq.windows(2) {
                succ[index[&w[0]]].push(index[&w[1]]);
            }
        }
        for (a, b) in self.lift_wr(None) {
            succ[index[&a]].push(index[&b]);
        }
        crate::graph::find_cycle(&succ).is_none()
    }

    /// Restricts `(self, co)` to the first `n` transactions of `co`. The
    /// initial transaction is always kept.
    pub fn prefix(&self, co: &CommitOrder, n: usize) -> (History, CommitOrder) {
        let mut kept: Vec<TxnId> = co.0.iter().take(n).copied().collect();
        if !kept.contains(&self.init) {
            kept.insert(0, self.init);
        }
        let keep: BTreeSet<TxnId> = kept.iter().copied().collect();
        let mut out = self.clone();
        out.txns.retain(|id, _| keep.contains(id));
        for seq in &mut out.sessions {
            seq.retain(|t| keep.contains(t));
        }
        let live_ops: BTreeSet<OpId> = out
            .txns
            .values()
            .flat_map(|l| l.ops.iter().map(|o| o.id))
            .collect();
        out.wr
            .retain(|op, src| live_ops.contains(op) && keep.contains(src));
        out.rebuild_placement();
        (out, CommitOrder(kept))
    }

    fn rebuild_placement(&mut self) {
        self.placement.clear();
        for (s, seq) in self.sessions.iter().enumerate() {
            for (pos, t) in seq.iter().enumerate() {
                self.placement.insert(*t, (SessionId(s), pos));
            }
        }
    }

    /// Structural checks on a history assembled from outside the API:
    /// write-read totality and value agreement, well-formed logs, unique
    /// identifiers. Acyclicity of so ∪ wr is left to the checker.
    pub fn validate(&self) -> Result<(), HistoryError> {
        let bad = |m: String| Err(HistoryError::Malformed(m));
        if !self.txns.contains_key(&self.init) {
            return bad(format!("initial transaction {} missing", self.init));
        }
        if self.placement.contains_key(&self.init) {
            return bad("initial transaction must not belong to a session".into());
        }
        let mut seen_ops = BTreeSet::new();
        let mut read_ops = BTreeSet::new();
        for log in self.txns.values() {
            if log.id != self.init && !self.placement.contains_key(&log.id) {
                return bad(format!("{} belongs to no session", log.id));
            }
            if !log.is_well_formed() {
                return bad(format!("{} has a local read that misses its own write", log.id));
            }
            for (pos, op) in log.ops.iter().enumerate() {
                if !seen_ops.insert(op.id) {
                    return bad(format!("duplicate operation id {}", op.id));
                }
                if log.is_external_read(pos) {
                    read_ops.insert(op.id);
                    let Some(src) = self.wr.get(&op.id) else {
                        return bad(format!("external read {} in {} has no source", op.id, log.id));
                    };
                    if *src == log.id {
                        return bad(format!("read {} sources from its own transaction", op.id));
                    }
                    if !self.is_committed(*src) {
                        return bad(format!("read {} sources from uncommitted {src}", op.id));
                    }
                    match self.final_write(*src, &op.key) {
                        Some(v) if v == &op.value => {}
                        _ => {
                            return bad(format!(
                                "read {} of {}={} is not written by {src}",
                                op.id, op.key, op.value
                            ))
                        }
                    }
                }
            }
        }
        if let Some(op) = self.wr.keys().find(|op| !read_ops.contains(op)) {
            return bad(format!("write-read entry for {op}, which is not an external read"));
        }
        for (s, seq) in self.sessions.iter().enumerate() {
            for t in &seq[..seq.len().saturating_sub(1)] {
                if !self.txns[t].committed {
                    return bad(format!("{t} in s{s} is uncommitted but not last"));
                }
            }
        }
        Ok(())
    }
}
