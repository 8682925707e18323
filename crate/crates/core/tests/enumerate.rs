use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weakstore_core::executor::{execute, StoreConfig};
use weakstore_core::isolation::{satisfies, satisfies_with_order};
use weakstore_core::testkit::gen::{random_program, ProgramShape};
use weakstore_core::testkit::{baseline_enumerate, coverage, observable, serial_enumerate, serial_explore, DEFAULT_NODE_CAP};
use weakstore_core::LevelKind;

fn shape() -> ProgramShape {
    ProgramShape {
        min_sessions: 2,
        ..ProgramShape::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn serial_and_baseline_semantics_agree(seed in any::<u64>()) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), shape());
        for kind in LevelKind::ALL {
            let serial = serial_enumerate(&p, &kind.level()).unwrap();
            let baseline = baseline_enumerate(&p, &kind.level()).unwrap();
            prop_assert_eq!(&serial, &baseline, "{} on {}", kind, p.to_json());
        }
    }

    #[test]
    fn enumerated_histories_satisfy_and_are_prefix_closed(seed in any::<u64>()) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), shape());
        for kind in LevelKind::ALL {
            let level = kind.level();
            serial_explore(&p, &StoreConfig::new(kind), DEFAULT_NODE_CAP, |e| {
                let v = satisfies(&e.history, &level);
                assert!(v.satisfied);
                let co = v.witness.unwrap();
                for n in 1..=co.0.len() {
                    let (h, pco) = e.history.prefix(&co, n);
                    assert!(satisfies_with_order(&h, &pco, &level).unwrap());
                }
            })
            .unwrap();
        }
    }

    #[test]
    fn sampling_never_beats_enumeration(seed in any::<u64>()) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), shape());
        for kind in LevelKind::ALL {
            let max = serial_enumerate(&p, &kind.level()).unwrap().coverage();
            let mut seen = Vec::new();
            let mut last = 0;
            for run in 0..200 {
                let e = execute(&p, &StoreConfig::new(kind).with_seed(seed ^ run)).unwrap();
                seen.push(observable(&e.history));
                let now = coverage(seen.iter().cloned());
                prop_assert!(now >= last);
                last = now;
            }
            prop_assert!(last <= max);
        }
    }
}

#[test]
fn causal_covers_at_least_serializable() {
    for seed in 0..40 {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), shape());
        let causal = serial_enumerate(&p, &LevelKind::Causal.level()).unwrap();
        let ser = serial_enumerate(&p, &LevelKind::Serializability.level()).unwrap();
        assert!(causal.coverage() >= ser.coverage());
        assert_eq!(ser.difference(&causal).count(), 0);
    }
}
