use std::collections::BTreeMap;

use super::{Chooser, ExecError, RandomChooser, StoreConfig};
use crate::history::{CommitOrder, History, SessionId, TxnId};
use crate::isolation::valid_read_sources;
use crate::value::{Key, Value};

/// Single-threaded store: a history plus the nondeterminism source.
pub struct Store {
    cfg: StoreConfig,
    history: History,
    chooser: Box<dyn Chooser>,
    exec_order: Vec<TxnId>,
    sessions: usize,
}

impl Store {
    pub fn new(cfg: StoreConfig) -> Self {
        let chooser = Box::new(RandomChooser::seeded(cfg.seed));
        Store::with_chooser(cfg, chooser)
    }

    pub fn with_chooser(cfg: StoreConfig, chooser: Box<dyn Chooser>) -> Self {
        let history = History::with_initial_values(cfg.default_value.clone(), cfg.initial_values.clone());
        let exec_order = vec![history.init_txn()];
        Store {
            cfg,
            history,
            chooser,
            exec_order,
            sessions: 0,
        }
    }

    pub fn config(&self) -> &StoreConfig {
        &self.cfg
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn into_history(self) -> History {
        self.history
    }

    /// Transactions in the order they began, the initial one first.
    pub fn exec_order(&self) -> CommitOrder {
        CommitOrder(self.exec_order.clone())
    }

    pub fn choose(&mut self, n: usize) -> usize {
        self.chooser.choose(n)
    }

    pub fn open_session(&mut self) -> SessionId {
        self.sessions += 1;
        SessionId(self.sessions - 1)
    }

    fn known(&self, s: SessionId) -> Result<(), ExecError> {
        if s.0 < self.sessions {
            Ok(())
        } else {
            Err(ExecError::UnknownSession(s))
        }
    }

    pub fn live_txn(&self, s: SessionId) -> Option<TxnId> {
        self.history.live_txn(s)
    }

    fn live(&self, s: SessionId) -> Result<TxnId, ExecError> {
        self.known(s)?;
        self.history
            .live_txn(s)
            .ok_or(ExecError::NoLiveTransaction(s))
    }

    pub fn begin(&mut self, s: SessionId) -> Result<TxnId, ExecError> {
        self.known(s)?;
        if self.history.live_txn(s).is_some() {
            return Err(ExecError::LiveTransactionExists(s));
        }
        let t = self.history.begin_txn(s)?;
        self.exec_order.push(t);
        Ok(t)
    }

    pub fn write(&mut self, s: SessionId, key: Key, value: Value) -> Result<(), ExecError> {
        let t = self.live(s)?;
        self.history.append_write(t, key, value)?;
        Ok(())
    }

    pub fn read(&mut self, s: SessionId, key: &Key) -> Result<Value, ExecError> {
        let t = self.live(s)?;
        if let Some((_, v)) = self.history.append_local_read(t, key)? {
            return Ok(v);
        }
        let mut candidates = self.candidates(t, key);
        if candidates.is_empty() {
            return Err(ExecError::InternalNoCandidate {
                txn: t,
                key: key.clone(),
            });
        }
        let pick = self.chooser.choose(candidates.len());
        let (source, value) = candidates.swap_remove(pick);
        self.history.append_read(t, key.clone(), value.clone(), source)?;
        Ok(value)
    }

    /// Writes the live transaction `t` may read for `key`, after the
    /// latest-per-session narrowing when configured.
    pub fn candidates(&self, t: TxnId, key: &Key) -> Vec<(TxnId, Value)> {
        let valid = valid_read_sources(&self.history, t, key, &self.cfg.level, &self.exec_order());
        if self.cfg.latest_per_session {
            latest_per_session(&self.history, valid)
        } else {
            valid
        }
    }

    pub fn commit(&mut self, s: SessionId) -> Result<TxnId, ExecError> {
        let t = self.live(s)?;
        self.history.commit(t)?;
        Ok(t)
    }

    pub fn session(&mut self, s: SessionId) -> SessionRef<'_> {
        SessionRef { store: self, session: s }
    }
}

/// Keeps, for each session (and for the initial transaction), only the
/// candidate latest in session order.
fn latest_per_session(h: &History, candidates: Vec<(TxnId, Value)>) -> Vec<(TxnId, Value)> {
    let mut best: BTreeMap<Option<SessionId>, (usize, TxnId, Value)> = BTreeMap::new();
    for (t, v) in candidates {
        let (group, pos) = match h.placement(t) {
            Some((s, pos)) => (Some(s), pos),
            None => (None, 0),
        };
        if best.get(&group).is_none_or(|(p, _, _)| *p < pos) {
            best.insert(group, (pos, t, v));
        }
    }
    let mut out: Vec<(TxnId, Value)> = best.into_values().map(|(_, t, v)| (t, v)).collect();
    out.sort_by_key(|(t, _)| *t);
    out
}

/// Key-value access within one session's live transaction.
pub trait Kv {
    fn read(&mut self, key: &Key) -> Result<Value, ExecError>;
    fn write(&mut self, key: &Key, value: Value) -> Result<(), ExecError>;
}

/// Transaction boundaries for a session, for drivers such as SQL scripts.
pub trait TxnControl: Kv {
    fn in_txn(&self) -> bool;
    fn begin(&mut self) -> Result<(), ExecError>;
    fn commit(&mut self) -> Result<(), ExecError>;
}

pub struct SessionRef<'a> {
    store: &'a mut Store,
    session: SessionId,
}

impl Kv for SessionRef<'_> {
    fn read(&mut self, key: &Key) -> Result<Value, ExecError> {
        self.store.read(self.session, key)
    }

    fn write(&mut self, key: &Key, value: Value) -> Result<(), ExecError> {
        self.store.write(self.session, key.clone(), value)
    }
}

impl TxnControl for SessionRef<'_> {
    fn in_txn(&self) -> bool {
        self.store.live_txn(self.session).is_some()
    }

    fn begin(&mut self) -> Result<(), ExecError> {
        self.store.begin(self.session).map(drop)
    }

    fn commit(&mut self) -> Result<(), ExecError> {
        self.store.commit(self.session).map(drop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolation::{satisfies, LevelKind};

    fn k(s: &str) -> Key {
        Key::named(s)
    }

    #[test]
    fn begin_write_read_commit() {
        let mut st = Store::new(StoreConfig::new(LevelKind::Causal));
        let s = st.open_session();
        assert_eq!(st.write(s, k("a"), 1.into()), Err(ExecError::NoLiveTransaction(s)));
        st.begin(s).unwrap();
        assert_eq!(st.begin(s), Err(ExecError::LiveTransactionExists(s)));
        assert_eq!(st.read(s, &k("a")).unwrap(), Value::Int(0));
        st.write(s, k("a"), 5.into()).unwrap();
        assert_eq!(st.read(s, &k("a")).unwrap(), Value::Int(5));
        st.commit(s).unwrap();
        assert!(st.commit(s).is_err());
        assert_eq!(st.history().len(), 2);
    }

    #[test]
    fn uncommitted_writes_are_invisible() {
        let mut st = Store::new(StoreConfig::new(LevelKind::ReadCommitted));
        let a = st.open_session();
        let b = st.open_session();
        st.begin(a).unwrap();
        st.write(a, k("x"), 1.into()).unwrap();
        st.commit(a).unwrap();
        st.begin(a).unwrap();
        st.write(a, k("x"), 2.into()).unwrap();
        let t = st.begin(b).unwrap();
        let values: Vec<Value> = st.candidates(t, &k("x")).into_iter().map(|(_, v)| v).collect();
        assert_eq!(values, vec![Value::Int(0), Value::Int(1)]);
    }

    #[test]
    fn latest_narrowing_is_subset() {
        for seed in 0..20 {
            let cfg = StoreConfig::new(LevelKind::Causal).with_seed(seed);
            let mut st = Store::new(cfg.clone().with_latest_per_session(true));
            let mut wide = Store::new(cfg);
            for store in [&mut st, &mut wide] {
                let s = store.open_session();
                for v in 1..=3 {
                    store.begin(s).unwrap();
                    store.write(s, k("x"), v.into()).unwrap();
                    store.commit(s).unwrap();
                }
                let r = store.open_session();
                store.begin(r).unwrap();
            }
            let t = st.live_txn(SessionId(1)).unwrap();
            let narrow = st.candidates(t, &k("x"));
            let all = wide.candidates(t, &k("x"));
            assert!(narrow.iter().all(|c| all.contains(c)));
            assert_eq!(narrow.len(), 2);
            assert_eq!(all.len(), 4);
        }
    }

    #[test]
    fn store_histories_satisfy_level() {
        for kind in LevelKind::ALL {
            for seed in 0..30 {
                let mut st = Store::new(StoreConfig::new(kind).with_seed(seed));
                let ss: Vec<SessionId> = (0..3).map(|_| st.open_session()).collect();
                for round in 0..4 {
                    let s = ss[st.choose(3)];
                    st.begin(s).unwrap();
                    let x = st.read(s, &k("x")).unwrap();
                    st.read(s, &k("y")).unwrap();
                    st.write(s, k(if round % 2 == 0 { "x" } else { "y" }), Value::list([x])).unwrap();
                    st.commit(s).unwrap();
                }
                assert!(satisfies(st.history(), &kind.level()).satisfied);
            }
        }
    }
}
