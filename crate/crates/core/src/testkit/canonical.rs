use std::collections::BTreeSet;

use crate::history::{History, OpKind, TxnId};
use crate::value::{Key, Value};

/// Where a read's value came from, named by position rather than id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Init,
    /// Session index and position within the session.
    Txn(usize, usize),
    /// A read justified by the transaction's own earlier write.
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonOp {
    Write(Key, Value),
    Read(Key, Value, Source),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonTxn {
    pub ops: Vec<CanonOp>,
    pub committed: bool,
}

/// A history with identifiers replaced by positions, so that histories
/// that differ only in id assignment compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalHistory {
    pub sessions: Vec<Vec<CanonTxn>>,
}

impl CanonicalHistory {
    pub fn of(h: &History) -> Self {
        let source = |t: TxnId| match h.placement(t) {
            Some((s, pos)) => Source::Txn(s.0, pos),
            None => Source::Init,
        };
        let sessions = h
            .sessions()
            .iter()
            .map(|seq| {
                seq.iter()
                    .map(|t| {
                        let log = h.txn(*t).expect("session transactions exist");
                        let ops = log
                            .ops
                            .iter()
                            .map(|op| match op.kind {
                                OpKind::Write => CanonOp::Write(op.key.clone(), op.value.clone()),
                                OpKind::Read => CanonOp::Read(
                                    op.key.clone(),
                                    op.value.clone(),
                                    h.wr_source(op.id).map_or(Source::Local, source),
                                ),
                            })
                            .collect();
                        CanonTxn {
                            ops,
                            committed: log.committed,
                        }
                    })
                    .collect()
            })
            .collect();
        CanonicalHistory { sessions }
    }

    /// Values returned by external reads, by session, then transaction,
    /// then program order.
    pub fn observable(&self) -> Vec<Value> {
        self.sessions
            .iter()
            .flatten()
            .flat_map(|t| &t.ops)
            .filter_map(|op| match op {
                CanonOp::Read(_, v, s) if *s != Source::Local => Some(v.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Histories up to renaming of transaction and operation ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistorySet(BTreeSet<CanonicalHistory>);

impl HistorySet {
    pub fn new() -> Self {
        HistorySet::default()
    }

    pub fn insert(&mut self, h: &History) -> bool {
        self.0.insert(CanonicalHistory::of(h))
    }

    pub fn insert_canonical(&mut self, c: CanonicalHistory) -> bool {
        self.0.insert(c)
    }

    pub fn contains(&self, h: &History) -> bool {
        self.0.contains(&CanonicalHistory::of(h))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CanonicalHistory> {
        self.0.iter()
    }

    /// Members of `self` missing from `other`.
    pub fn difference<'a>(&'a self, other: &'a HistorySet) -> impl Iterator<Item = &'a CanonicalHistory> {
        self.0.difference(&other.0)
    }

    /// Distinct observable states among the members.
    pub fn coverage(&self) -> usize {
        self.0.iter().map(|c| c.observable()).collect::<BTreeSet<_>>().len()
    }
}
