use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weakstore_core::isolation::{
    brute_force_satisfies, derived_edges, satisfies, satisfies_with_order, DEFAULT_BRUTE_FORCE_CAP,
};
use weakstore_core::testkit::gen::{random_history, HistoryShape};
use weakstore_core::{History, Key, LevelKind, SessionId, Value};

fn history(seed: u64) -> History {
    random_history(&mut ChaCha8Rng::seed_from_u64(seed), HistoryShape::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_brute_force(seed in any::<u64>()) {
        let h = history(seed);
        for kind in LevelKind::ALL {
            let fast = satisfies(&h, &kind.level());
            let slow = brute_force_satisfies(&h, &kind.level(), DEFAULT_BRUTE_FORCE_CAP).unwrap();
            prop_assert_eq!(fast.satisfied, slow, "{} on {}", kind, h.to_json());
            if let Some(co) = &fast.witness {
                prop_assert!(satisfies_with_order(&h, co, &kind.level()).unwrap());
            }
            prop_assert_eq!(fast.violation.is_some(), !fast.satisfied);
        }
    }

    #[test]
    fn levels_are_ordered(seed in any::<u64>()) {
        let h = history(seed);
        let ok = |k: LevelKind| satisfies(&h, &k.level()).satisfied;
        prop_assert!(!ok(LevelKind::Serializability) || ok(LevelKind::Causal));
        prop_assert!(!ok(LevelKind::Causal) || ok(LevelKind::ReadCommitted));
    }

    #[test]
    fn prefixes_of_witnesses_satisfy(seed in any::<u64>()) {
        let h = history(seed);
        for kind in LevelKind::ALL {
            let Some(co) = satisfies(&h, &kind.level()).witness else { continue };
            for n in 0..=co.0.len() {
                let (p, pco) = h.prefix(&co, n);
                prop_assert!(satisfies_with_order(&p, &pco, &kind.level()).unwrap());
                // Constraints only grow as the history is extended.
                let small = derived_edges(&p, &kind.level(), Some(&pco)).unwrap();
                let full = derived_edges(&h, &kind.level(), Some(&co)).unwrap();
                prop_assert!(small.is_subset(&full));
            }
        }
    }

    #[test]
    fn extra_read_keeps_derived_edges(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let h = history(seed);
        // Appending to a history that is already cyclic trips the
        // builder's own consistency check.
        prop_assume!(h.is_acyclic());
        let key = Key::named("a");
        let writers: Vec<_> = h
            .txn_ids()
            .into_iter()
            .filter_map(|t| h.final_write(t, &key).map(|v| (t, v.clone())))
            .collect();
        let (source, value): (_, Value) = writers[pick.index(writers.len())].clone();
        let mut bigger = h.clone();
        let t = bigger.begin_txn(SessionId(h.sessions().len())).unwrap();
        bigger.append_read(t, key, value, source).unwrap();
        bigger.commit(t).unwrap();
        for kind in [LevelKind::ReadCommitted, LevelKind::Causal] {
            let before = derived_edges(&h, &kind.level(), None).unwrap();
            let after = derived_edges(&bigger, &kind.level(), None).unwrap();
            prop_assert!(before.is_subset(&after));
        }
    }
}
