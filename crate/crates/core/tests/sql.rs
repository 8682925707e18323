use std::sync::Mutex;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weakstore_core::executor::{Store, StoreConfig, TxnControl};
use weakstore_core::sql::{run_script, Catalog, Outcome, SqlError};
use weakstore_core::testkit::tables::{random_statements, schema, TableOracle};
use weakstore_core::LevelKind;

/// Runs the statements one by one in a single session, either each in
/// its own transaction or all inside one.
fn run(level: LevelKind, seed: u64, one_txn: bool, stmts: &[String]) -> Vec<Result<Outcome, SqlError>> {
    let mut store = Store::new(StoreConfig::new(level).with_seed(seed));
    let s = store.open_session();
    let catalog = Mutex::new(Catalog::new());
    let mut session = store.session(s);
    if one_txn {
        session.begin().unwrap();
    }
    stmts
        .iter()
        .map(|text| run_script(&mut session, &catalog, text).map(|mut out| out.remove(0)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn matches_in_memory_tables(seed in any::<u64>(), len in 1usize..25) {
        let stmts: Vec<_> = schema()
            .into_iter()
            .chain(random_statements(&mut ChaCha8Rng::seed_from_u64(seed), len))
            .collect();
        let mut oracle = TableOracle::new();
        let expected: Vec<_> = stmts.iter().map(|s| oracle.apply(s)).collect();
        let texts: Vec<String> = stmts.iter().map(|s| s.to_string()).collect();
        for kind in LevelKind::ALL {
            let got = run(kind, seed, true, &texts);
            prop_assert_eq!(&got, &expected, "{} in one transaction", kind);
        }
        // Causal and stronger levels keep a session's own writes visible
        // across its transactions.
        for kind in [LevelKind::Causal, LevelKind::Serializability] {
            let got = run(kind, seed, false, &texts);
            prop_assert_eq!(&got, &expected, "{} per statement", kind);
        }
    }
}

#[test]
fn insert_then_delete_restores_the_set() {
    let stmts = [
        "CREATE TABLE t (k, v)",
        "INSERT INTO t VALUES (1, 'a')",
        "INSERT INTO t VALUES (2, 'b')",
        "SELECT k FROM t",
        "INSERT INTO t VALUES (3, 'c')",
        "DELETE FROM t WHERE k = 3",
        "SELECT k FROM t",
    ];
    let texts: Vec<String> = stmts.iter().map(|s| s.to_string()).collect();
    let out = run(LevelKind::Causal, 0, false, &texts);
    assert_eq!(out[3], out[6]);
}
