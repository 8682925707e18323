use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::Rng;

use super::{ExecError, Kv, Store, StoreConfig, TxnControl};
use crate::history::{History, SessionId, TxnId};
use crate::value::{Key, Value};

struct State {
    store: Store,
    /// Session whose transaction holds the global lock.
    owner: Option<SessionId>,
}

/// A [`Store`] shared between threads. A transaction holds one global
/// lock from `begin` to `commit`, so transactions of different sessions
/// never overlap.
pub struct SharedStore {
    state: Mutex<State>,
    released: Condvar,
    delay_max_ms: u64,
}

impl SharedStore {
    pub fn new(cfg: StoreConfig) -> Self {
        let delay_max_ms = cfg.delay_max_ms;
        SharedStore {
            state: Mutex::new(State {
                store: Store::new(cfg),
                owner: None,
            }),
            released: Condvar::new(),
            delay_max_ms,
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn open_session(&self) -> SessionId {
        self.lock().store.open_session()
    }

    /// Starts a transaction, first sleeping a random delay when configured,
    /// then waiting for the global lock (up to `timeout` when given).
    pub fn begin(&self, s: SessionId, timeout: Option<Duration>) -> Result<TxnId, ExecError> {
        if self.delay_max_ms > 0 {
            let ms = rand::thread_rng().gen_range(0..=self.delay_max_ms);
            std::thread::sleep(Duration::from_millis(ms));
        }
        let deadline = timeout.map(|d| Instant::now() + d);
        let mut g = self.lock();
        if g.store.live_txn(s).is_some() {
            return Err(ExecError::LiveTransactionExists(s));
        }
        while g.owner.is_some() {
            g = match deadline {
                None => self.released.wait(g).unwrap_or_else(|e| e.into_inner()),
                Some(deadline) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return Err(ExecError::BeginTimeout);
                    }
                    self.released
                        .wait_timeout(g, deadline - now)
                        .unwrap_or_else(|e| e.into_inner())
                        .0
                }
            };
        }
        let t = g.store.begin(s)?;
        g.owner = Some(s);
        Ok(t)
    }

    pub fn read(&self, s: SessionId, key: &Key) -> Result<Value, ExecError> {
        self.lock().store.read(s, key)
    }

    pub fn write(&self, s: SessionId, key: Key, value: Value) -> Result<(), ExecError> {
        self.lock().store.write(s, key, value)
    }

    pub fn commit(&self, s: SessionId) -> Result<TxnId, ExecError> {
        let mut g = self.lock();
        let t = g.store.commit(s)?;
        if g.owner == Some(s) {
            g.owner = None;
            self.released.notify_all();
        }
        Ok(t)
    }

    pub fn live_txn(&self, s: SessionId) -> Option<TxnId> {
        self.lock().store.live_txn(s)
    }

    /// Runs `f` with exclusive access to the underlying store. Holding the
    /// global lock is up to the caller.
    pub fn with_store<R>(&self, f: impl FnOnce(&mut Store) -> R) -> R {
        f(&mut self.lock().store)
    }

    pub fn history(&self) -> History {
        self.lock().store.history().clone()
    }

    pub fn config(&self) -> StoreConfig {
        self.lock().store.config().clone()
    }
}

/// One session of a [`SharedStore`], for drivers such as SQL scripts.
/// Implicit and explicit begins wait at most `timeout`.
pub struct SharedSession<'a> {
    pub store: &'a SharedStore,
    pub session: SessionId,
    pub timeout: Option<Duration>,
}

impl Kv for SharedSession<'_> {
    fn read(&mut self, key: &Key) -> Result<Value, ExecError> {
        self.store.read(self.session, key)
    }

    fn write(&mut self, key: &Key, value: Value) -> Result<(), ExecError> {
        self.store.write(self.session, key.clone(), value)
    }
}

impl TxnControl for SharedSession<'_> {
    fn in_txn(&self) -> bool {
        self.store.live_txn(self.session).is_some()
    }

    fn begin(&mut self) -> Result<(), ExecError> {
        self.store.begin(self.session, self.timeout).map(drop)
    }

    fn commit(&mut self) -> Result<(), ExecError> {
        self.store.commit(self.session).map(drop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolation::{satisfies, LevelKind};
    use std::sync::Arc;

    #[test]
    fn second_begin_waits_for_commit() {
        let store = Arc::new(SharedStore::new(StoreConfig::new(LevelKind::Causal)));
        let a = store.open_session();
        let b = store.open_session();
        store.begin(a, None).unwrap();
        assert_eq!(
            store.begin(b, Some(Duration::from_millis(20))),
            Err(ExecError::BeginTimeout)
        );
        let other = Arc::clone(&store);
        let waiter = std::thread::spawn(move || other.begin(b, None));
        std::thread::sleep(Duration::from_millis(20));
        store.write(a, Key::named("x"), 1.into()).unwrap();
        store.commit(a).unwrap();
        waiter.join().unwrap().unwrap();
        store.commit(b).unwrap();
    }

    #[test]
    fn concurrent_clients_produce_valid_history() {
        let cfg = StoreConfig::new(LevelKind::Causal).with_delay_ms(1);
        let store = Arc::new(SharedStore::new(cfg));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || {
                    let s = store.open_session();
                    for _ in 0..5 {
                        store.begin(s, None).unwrap();
                        let v = store.read(s, &Key::named("x")).unwrap();
                        store.write(s, Key::named("x"), Value::list([v, i.into()])).unwrap();
                        store.commit(s).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let h = store.history();
        assert_eq!(h.len(), 21);
        assert!(satisfies(&h, &LevelKind::Causal.level()).satisfied);
    }
}
