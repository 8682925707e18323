#![allow(dead_code)]

use std::sync::Arc;

use reqwest::blocking::{Client, Response};
use serde_json::{json, Value as JsonValue};

use weakstore::{router, AppState, ServerSettings};
use weakstore_core::executor::StoreConfig;

/// A server on an ephemeral port, running on its own runtime thread.
pub struct TestServer {
    pub base: String,
    pub app: Arc<AppState>,
    pub http: Client,
}

impl TestServer {
    pub fn start(cfg: StoreConfig, settings: ServerSettings) -> TestServer {
        let app = AppState::new(cfg, settings);
        let (tx, rx) = std::sync::mpsc::channel();
        let served = Arc::clone(&app);
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                weakstore::api::spawn_reaper(Arc::clone(&served));
                axum::serve(listener, router(served)).await.unwrap();
            });
        });
        let addr = rx.recv().unwrap();
        TestServer {
            base: format!("http://{addr}"),
            app,
            http: Client::new(),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn session(&self) -> Session<'_> {
        let r: JsonValue = self.http.post(self.url("/session")).send().unwrap().json().unwrap();
        Session {
            server: self,
            token: r["token"].as_str().unwrap().to_owned(),
        }
    }

    pub fn history(&self) -> String {
        self.http.get(self.url("/history")).send().unwrap().text().unwrap()
    }
}

pub struct Session<'a> {
    pub server: &'a TestServer,
    pub token: String,
}

impl Session<'_> {
    pub fn post(&self, path: &str, body: JsonValue) -> Response {
        self.server
            .http
            .post(self.server.url(path))
            .header("X-Session-Token", &self.token)
            .json(&body)
            .send()
            .unwrap()
    }

    pub fn ok(&self, path: &str, body: JsonValue) -> JsonValue {
        let r = self.post(path, body);
        assert!(r.status().is_success(), "{path}: {}", r.text().unwrap());
        r.json().unwrap()
    }

    pub fn begin(&self) {
        self.ok("/kv/begin", json!({}));
    }

    pub fn commit(&self) {
        self.ok("/kv/commit", json!({}));
    }

    pub fn read(&self, key: &str) -> JsonValue {
        self.ok("/kv/read", json!({ "key": key }))["value"].clone()
    }

    pub fn write(&self, key: &str, value: JsonValue) {
        self.ok("/kv/write", json!({ "key": key, "value": value }));
    }

    pub fn sql(&self, query: &str) -> JsonValue {
        self.ok("/sql", json!({ "query": query }))
    }
}

pub mod figs {
    use std::collections::BTreeMap;

    use weakstore_core::{History, Key, SessionId, TxnId, Value};

    fn k(s: &str) -> Key {
        Key::named(s)
    }

    /// t1 = [w(k1,1)], t2 = [w(k1,2), w(k2,2)], t3 = [r(k2,2), r(k1,1)].
    pub fn fig_5a() -> (History, [TxnId; 3]) {
        let mut h = History::new(Value::Int(0));
        let t1 = h.begin_txn(SessionId(0)).unwrap();
        h.append_write(t1, k("k1"), 1.into()).unwrap();
        h.commit(t1).unwrap();
        let t2 = h.begin_txn(SessionId(1)).unwrap();
        h.append_write(t2, k("k1"), 2.into()).unwrap();
        h.append_write(t2, k("k2"), 2.into()).unwrap();
        h.commit(t2).unwrap();
        let t3 = h.begin_txn(SessionId(2)).unwrap();
        h.append_read(t3, k("k2"), 2.into(), t2).unwrap();
        h.append_read(t3, k("k1"), 1.into(), t1).unwrap();
        h.commit(t3).unwrap();
        (h, [t1, t2, t3])
    }

    /// t1 = [w(k1,1)], t2 = [r(k1,1), w(k1,2)], t4 = [r(k1,2), w(k2,1)],
    /// t3 = [r(k1,1), r(k2,1)].
    pub fn fig_5b() -> (History, [TxnId; 4]) {
        let mut h = History::new(Value::Int(0));
        let t1 = h.begin_txn(SessionId(0)).unwrap();
        h.append_write(t1, k("k1"), 1.into()).unwrap();
        h.commit(t1).unwrap();
        let t2 = h.begin_txn(SessionId(1)).unwrap();
        h.append_read(t2, k("k1"), 1.into(), t1).unwrap();
        h.append_write(t2, k("k1"), 2.into()).unwrap();
        h.commit(t2).unwrap();
        let t4 = h.begin_txn(SessionId(2)).unwrap();
        h.append_read(t4, k("k1"), 2.into(), t2).unwrap();
        h.append_write(t4, k("k2"), 1.into()).unwrap();
        h.commit(t4).unwrap();
        let t3 = h.begin_txn(SessionId(3)).unwrap();
        h.append_read(t3, k("k1"), 1.into(), t1).unwrap();
        h.append_read(t3, k("k2"), 1.into(), t4).unwrap();
        h.commit(t3).unwrap();
        (h, [t1, t2, t4, t3])
    }

    /// The shopping-cart anomaly: the cart starts as {I}; one session adds
    /// I while the other deletes it, then sees an empty cart, then {I, I}.
    pub fn cart_anomaly() -> History {
        let cart = k("cart");
        let item = || Value::str("I");
        let mut h = History::with_initial_values(Value::Null, BTreeMap::from([(cart.clone(), Value::list([item()]))]));
        let init = h.init_txn();
        let add = h.begin_txn(SessionId(0)).unwrap();
        h.append_read(add, cart.clone(), Value::list([item()]), init).unwrap();
        h.append_write(add, cart.clone(), Value::list([item(), item()])).unwrap();
        h.commit(add).unwrap();
        let del = h.begin_txn(SessionId(1)).unwrap();
        h.append_read(del, cart.clone(), Value::list([item()]), init).unwrap();
        h.append_write(del, cart.clone(), Value::list([])).unwrap();
        h.commit(del).unwrap();
        let q1 = h.begin_txn(SessionId(1)).unwrap();
        h.append_read(q1, cart.clone(), Value::list([]), del).unwrap();
        h.commit(q1).unwrap();
        let q2 = h.begin_txn(SessionId(1)).unwrap();
        h.append_read(q2, cart, Value::list([item(), item()]), add).unwrap();
        h.commit(q2).unwrap();
        h
    }
}

/// A fresh scratch directory under the system temp dir.
pub fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("weakstore-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
