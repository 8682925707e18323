mod common;

use std::time::Duration;

use serde_json::json;

use common::TestServer;
use weakstore::ServerSettings;
use weakstore_core::executor::StoreConfig;
use weakstore_core::isolation::satisfies;
use weakstore_core::{History, LevelKind};

fn server(level: LevelKind) -> TestServer {
    TestServer::start(StoreConfig::new(level), ServerSettings::default())
}

#[test]
fn session_lifecycle() {
    let srv = server(LevelKind::Causal);
    let s = srv.session();
    s.begin();
    assert_eq!(s.read("x"), json!(0));
    s.write("x", json!([1, "a"]));
    assert_eq!(s.read("x"), json!([1, "a"]));
    s.commit();
    let r = srv.http.delete(srv.url(&format!("/session/{}", s.token))).send().unwrap();
    assert_eq!(r.status(), 204);
    let r = s.post("/kv/begin", json!({}));
    assert_eq!(r.status(), 404);
    let h = History::from_json(&srv.history()).unwrap();
    assert_eq!(h.len(), 2);
}

#[test]
fn errors_are_machine_readable() {
    let srv = server(LevelKind::Causal);
    let s = srv.session();
    let code = |r: reqwest::blocking::Response| -> (u16, String) {
        let status = r.status().as_u16();
        let body: serde_json::Value = r.json().unwrap();
        (status, body["error"].as_str().unwrap().to_owned())
    };
    assert_eq!(code(s.post("/kv/read", json!({ "key": "x" }))), (400, "no_live_transaction".into()));
    s.begin();
    assert_eq!(code(s.post("/kv/begin", json!({}))), (409, "live_transaction".into()));
    assert_eq!(code(s.post("/kv/read", json!({ "nope": 1 }))), (400, "malformed_request".into()));
    assert_eq!(code(s.post("/kv/read", json!({ "key": "" }))), (400, "invalid_key".into()));
    let r = srv.http.post(srv.url("/kv/begin")).send().unwrap();
    assert_eq!(code(r), (400, "missing_token".into()));
    let r = s.post("/sql", json!({ "query": "SELECT a FROM t JOIN u" }));
    let status = r.status();
    let body: serde_json::Value = r.json().unwrap();
    assert_eq!(status, 400);
    assert_eq!(body["error"], "sql_syntax");
    assert_eq!(body["detail"]["unsupported"], "JOIN");
}

#[test]
fn begin_waits_then_times_out() {
    let settings = ServerSettings {
        begin_timeout: Duration::from_millis(100),
        idle_timeout: None,
    };
    let srv = TestServer::start(StoreConfig::new(LevelKind::Causal), settings);
    let a = srv.session();
    let b = srv.session();
    a.begin();
    let r = b.post("/kv/begin", json!({}));
    assert_eq!(r.status(), 409);
    let body: serde_json::Value = r.json().unwrap();
    assert_eq!(body["error"], "begin_timeout");
    a.commit();
    b.begin();
    b.commit();
}

#[test]
fn idle_sessions_release_the_lock() {
    let settings = ServerSettings {
        begin_timeout: Duration::from_secs(5),
        idle_timeout: Some(Duration::from_millis(100)),
    };
    let srv = TestServer::start(StoreConfig::new(LevelKind::Causal), settings);
    let a = srv.session();
    a.begin();
    a.write("k", json!(1));
    let b = srv.session();
    b.begin();
    b.commit();
    assert_eq!(a.post("/kv/commit", json!({})).status(), 404);
    let h = History::from_json(&srv.history()).unwrap();
    assert!(h.txns().all(|t| t.committed));
}

#[test]
fn sql_over_http() {
    let srv = server(LevelKind::Serializability);
    let s = srv.session();
    s.sql("CREATE TABLE people (id, name, city)");
    let r = s.sql(
        "INSERT INTO people VALUES (1, 'Alice', 'Paris'); \
         INSERT INTO people VALUES (2, 'Bob', 'Rome'); \
         SELECT name FROM people WHERE city = 'Paris'",
    );
    assert_eq!(r["rows"], json!([["Alice"]]));
    assert_eq!(r["results"][0], json!({ "affected": 1 }));
    let r = s.sql("BEGIN; DELETE FROM people WHERE id = 1; SELECT id FROM people; COMMIT");
    assert_eq!(r["rows"], json!([[2]]));
    let other = srv.session();
    assert_eq!(other.sql("SELECT * FROM people")["columns"], json!(["id", "name", "city"]));
}

#[test]
fn config_endpoint() {
    let srv = TestServer::start(
        StoreConfig::new(LevelKind::ReadCommitted).with_seed(9),
        ServerSettings::default(),
    );
    let c: serde_json::Value = srv.http.get(srv.url("/config")).send().unwrap().json().unwrap();
    assert_eq!(c["isolation"], "read-committed");
    assert_eq!(c["seed"], 9);
}

#[test]
fn concurrent_clients_never_tear_transactions() {
    let srv = server(LevelKind::Causal);
    std::thread::scope(|scope| {
        for i in 0..4 {
            let srv = &srv;
            scope.spawn(move || {
                let s = srv.session();
                for j in 0..5 {
                    s.begin();
                    let v = s.read("counter");
                    s.write("counter", json!([v, i, j]));
                    s.read("other");
                    s.commit();
                }
            });
        }
    });
    let h = History::from_json(&srv.history()).unwrap();
    assert_eq!(h.len(), 21);
    assert!(satisfies(&h, &LevelKind::Causal.level()).satisfied);
    // With the global lock, transactions run one at a time, so their ids
    // increase with their operations' ids.
    let mut last = None;
    for t in h.txn_ids().into_iter().skip(1) {
        let ops = &h.txn(t).unwrap().ops;
        assert!(Some(ops.first().unwrap().id.0) > last);
        last = Some(ops.last().unwrap().id.0);
    }
}

#[test]
fn token_isolation() {
    let srv = server(LevelKind::Causal);
    let a = srv.session();
    let b = srv.session();
    a.begin();
    a.write("x", json!(5));
    let r = b.post("/kv/write", json!({ "key": "x", "value": 6 }));
    assert_eq!(r.status(), 400);
    a.commit();
    let h = History::from_json(&srv.history()).unwrap();
    let writes: usize = h.txns().map(|t| t.writes().len()).sum();
    assert_eq!(writes, 1);
}
