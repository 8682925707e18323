use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{History, HistoryError, OpId, OpKind, Operation, SessionId, TransactionLog, TxnId};
use crate::value::{Key, Value};

/// On-disk form of a [`History`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryDoc {
    pub sessions: Vec<Vec<TxnDoc>>,
    pub wr: Vec<WrDoc>,
    pub init: InitDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxnDoc {
    pub id: u64,
    pub ops: Vec<OpDoc>,
    pub committed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpDoc {
    pub op: OpTag,
    pub key: Key,
    pub value: Value,
    pub id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpTag {
    #[serde(rename = "r")]
    Read,
    #[serde(rename = "w")]
    Write,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrDoc {
    pub read_op: u64,
    pub source_txn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitDoc {
    pub txn: u64,
    pub default: Value,
    /// Keys whose initial value differs from `default`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<Key, Value>,
}

impl History {
    pub fn to_doc(&self) -> HistoryDoc {
        let sessions = self
            .sessions
            .iter()
            .map(|seq| {
                seq.iter()
                    .map(|t| {
                        let log = &self.txns[t];
                        TxnDoc {
                            id: t.0,
                            committed: log.committed,
                            ops: log
                                .ops
                                .iter()
                                .map(|op| OpDoc {
                                    op: match op.kind {
                                        OpKind::Read => OpTag::Read,
                                        OpKind::Write => OpTag::Write,
                                    },
                                    key: op.key.clone(),
                                    value: op.value.clone(),
                                    id: op.id.0,
                                })
                                .collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        HistoryDoc {
            sessions,
            wr: self
                .wr
                .iter()
                .map(|(op, src)| WrDoc {
                    read_op: op.0,
                    source_txn: src.0,
                })
                .collect(),
            init: InitDoc {
                txn: self.init.0,
                default: self.default.clone(),
                values: self.init_values.clone(),
            },
        }
    }

    /// Builds and validates a history from its document form.
    pub fn from_doc(doc: HistoryDoc) -> Result<History, HistoryError> {
        let bad = |m: String| HistoryError::Malformed(m);
        let init = TxnId(doc.init.txn);
        let mut h = History::with_initial_values(doc.init.default, doc.init.values);
        h.txns.clear();
        let mut init_log = TransactionLog::new(init);
        init_log.committed = true;
        h.txns.insert(init, init_log);
        h.init = init;

        let mut max_txn = init.0;
        let mut max_op = None::<u64>;
        for seq in doc.sessions {
            let mut ids = Vec::with_capacity(seq.len());
            for txn in seq {
                let id = TxnId(txn.id);
                if h.txns.contains_key(&id) {
                    return Err(bad(format!("duplicate transaction id {id}")));
                }
                max_txn = max_txn.max(id.0);
                let ops = txn
                    .ops
                    .into_iter()
                    .map(|op| {
                        max_op = Some(max_op.map_or(op.id, |m: u64| m.max(op.id)));
                        Operation {
                            id: OpId(op.id),
                            kind: match op.op {
                                OpTag::Read => OpKind::Read,
                                OpTag::Write => OpKind::Write,
                            },
                            key: op.key,
                            value: op.value,
                        }
                    })
                    .collect();
                h.txns.insert(
                    id,
                    TransactionLog {
                        id,
                        ops,
                        committed: txn.committed,
                    },
                );
                ids.push(id);
            }
            h.sessions.push(ids);
        }
        let mut seen = BTreeSet::new();
        for w in doc.wr {
            if !seen.insert(w.read_op) {
                return Err(bad(format!("read o{} has two write-read sources", w.read_op)));
            }
            let src = TxnId(w.source_txn);
            if !h.txns.contains_key(&src) {
                return Err(bad(format!("write-read source {src} does not exist")));
            }
            h.wr.insert(OpId(w.read_op), src);
        }
        h.next_txn = max_txn + 1;
        h.next_op = max_op.map_or(0, |m| m + 1);
        h.rebuild_placement();
        h.validate()?;
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("history documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<History, HistoryError> {
        let doc: HistoryDoc =
            serde_json::from_str(text).map_err(|e| HistoryError::Malformed(e.to_string()))?;
        History::from_doc(doc)
    }

    /// Number of sessions, counting empty ones.
    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// All operations paired with their transaction, in session order.
    pub fn ops_in_session_order(&self) -> Vec<(SessionId, TxnId, &Operation)> {
        let mut out = Vec::new();
        for (s, seq) in self.sessions.iter().enumerate() {
            for t in seq {
                for op in &self.txns[t].ops {
                    out.push((SessionId(s), *t, op));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"sessions":[],"wr":[],"init":{"txn":0,"default":0},"extra":1}"#;
        assert!(History::from_json(text).is_err());
        let text = r#"{"sessions":[],"wr":[],"init":{"txn":0,"default":0}}"#;
        assert_eq!(History::from_json(text).unwrap().len(), 1);
    }

    #[test]
    fn truncated_json_rejected() {
        assert!(matches!(
            History::from_json(r#"{"sessions":[[{"id":1,"#),
            Err(HistoryError::Malformed(_))
        ));
    }

    #[test]
    fn missing_source_rejected() {
        let text = r#"{"sessions":[[{"id":1,"ops":[{"op":"r","key":"x","value":0,"id":0}],"committed":true}]],
                       "wr":[],"init":{"txn":0,"default":0}}"#;
        assert!(matches!(History::from_json(text), Err(HistoryError::Malformed(_))));
    }

    #[test]
    fn value_mismatch_rejected() {
        let text = r#"{"sessions":[[{"id":1,"ops":[{"op":"r","key":"x","value":3,"id":0}],"committed":true}]],
                       "wr":[{"read_op":0,"source_txn":0}],"init":{"txn":0,"default":0}}"#;
        assert!(History::from_json(text).is_err());
    }

    #[test]
    fn explicit_initial_values() {
        let text = r#"{"sessions":[[{"id":1,"ops":[{"op":"r","key":"x","value":["I"],"id":0}],"committed":true}]],
                       "wr":[{"read_op":0,"source_txn":0}],"init":{"txn":0,"default":0,"values":{"x":["I"]}}}"#;
        let h = History::from_json(text).unwrap();
        assert_eq!(History::from_json(&h.to_json()).unwrap(), h);
    }
}
