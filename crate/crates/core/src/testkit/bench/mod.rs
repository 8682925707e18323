//! The microbenchmark applications as client programs, each with the
//! assertion whose violation marks its anomaly, plus the randomized
//! campaigns that look for a first violation.

mod cart;
mod courseware;
mod stack;
mod twitter;

use std::collections::BTreeMap;

use crate::executor::{execute, Assertion, ExecError, Execution, Expr, InitSpec, Program, StoreConfig};
use crate::isolation::IsolationLevel;
use crate::value::{Key, Value};

pub use cart::cart;
pub use courseware::{courseware_overflow, courseware_removed};
pub use stack::stack;
pub use twitter::twitter;

/// A named program whose assertions hold in every serializable run.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub program: Program,
}

impl Benchmark {
    /// Names of the assertions the run violates.
    pub fn violations(&self, e: &Execution) -> Vec<String> {
        self.program.failed_assertions(&e.session_vars)
    }

    pub fn fails(&self, e: &Execution) -> bool {
        !self.violations(e).is_empty()
    }

    /// Runs seeds `first_seed`, `first_seed + 1`, ... for at most `limit`
    /// iterations and returns the 1-based iteration of the first violation.
    pub fn first_failure(
        &self,
        level: &IsolationLevel,
        first_seed: u64,
        limit: u64,
    ) -> Result<Option<u64>, ExecError> {
        for i in 0..limit {
            let cfg = StoreConfig::new(level.clone()).with_seed(first_seed.wrapping_add(i));
            if self.fails(&execute(&self.program, &cfg)?) {
                return Ok(Some(i + 1));
            }
        }
        Ok(None)
    }

    /// Number of violating runs among `runs` seeds starting at `first_seed`.
    pub fn failure_count(&self, level: &IsolationLevel, first_seed: u64, runs: u64) -> Result<u64, ExecError> {
        let mut failed = 0;
        for i in 0..runs {
            let cfg = StoreConfig::new(level.clone()).with_seed(first_seed.wrapping_add(i));
            if self.fails(&execute(&self.program, &cfg)?) {
                failed += 1;
            }
        }
        Ok(failed)
    }
}

pub fn all() -> Vec<Benchmark> {
    vec![cart(), stack(), twitter(), courseware_overflow(), courseware_removed()]
}

fn list<const N: usize>(items: [&str; N]) -> Expr {
    Expr::List(items.iter().map(|s| Expr::from(*s)).collect())
}

fn strs<const N: usize>(items: [&str; N]) -> Value {
    Value::list(items.iter().map(|s| Value::str(*s)))
}

/// Occurrences of `item` in `list`.
fn count(list: Expr, item: &str) -> Expr {
    Expr::sub(Expr::len(list.clone()), Expr::len(Expr::remove(list, item)))
}

/// Every element of `universe` found in `a` is also in `b`.
fn subset(a: &str, b: &str, universe: &[&str]) -> Expr {
    Expr::And(
        universe
            .iter()
            .map(|x| Expr::Or(vec![Expr::not(Expr::contains(Expr::var(a), *x)), Expr::contains(Expr::var(b), *x)]))
            .collect(),
    )
}

fn assertion(name: &str, predicate: Expr) -> Assertion {
    Assertion {
        name: name.to_owned(),
        predicate,
    }
}

fn init(default: Value, values: &[(&str, Value)]) -> Option<InitSpec> {
    Some(InitSpec {
        default: Some(default),
        values: values
            .iter()
            .map(|(k, v)| (Key::named(k), v.clone()))
            .collect::<BTreeMap<_, _>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolation::LevelKind;
    use crate::testkit::serial_explore;

    #[test]
    fn serializable_runs_never_fail() {
        let ser = StoreConfig::new(LevelKind::Serializability);
        for b in all() {
            let mut runs = 0;
            serial_explore(&b.program, &ser, crate::testkit::DEFAULT_NODE_CAP, |e| {
                runs += 1;
                assert!(b.violations(e).is_empty(), "{} fails under serializability", b.name);
            })
            .unwrap();
            assert!(runs > 1);
        }
    }

    #[test]
    fn causal_runs_can_fail() {
        let causal = LevelKind::Causal.level();
        for b in all() {
            assert!(b.first_failure(&causal, 0, 2000).unwrap().is_some(), "{}", b.name);
        }
    }

    #[test]
    fn programs_round_trip_through_json() {
        for b in all() {
            assert_eq!(Program::from_json(&b.program.to_json()).unwrap(), b.program);
        }
    }
}
