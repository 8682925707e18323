//! Exhaustive exploration of a program's histories under the serial
//! semantics (whole transactions, validated reads) and under the baseline
//! interleaving semantics (reads from any committed transaction, filtered
//! by the level at the end).

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::canonical::{CanonicalHistory, HistorySet};
use crate::executor::{effective_config, execute_with, Chooser, ExecError, Execution, Instr, Program, Scope, StoreConfig};
use crate::history::{History, SessionId, TxnId};
use crate::isolation::{satisfies, IsolationLevel};
use crate::value::{Key, Value};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("exploration exceeded {cap} nodes")]
    BudgetExceeded { cap: usize },
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[derive(Default)]
struct Trace {
    prefix: Vec<usize>,
    taken: Vec<(usize, usize)>,
}

/// Follows a fixed prefix of choices, then always picks the first option,
/// recording every choice point.
struct Replay(Arc<Mutex<Trace>>);

impl Chooser for Replay {
    fn choose(&mut self, n: usize) -> usize {
        let mut t = self.0.lock().unwrap_or_else(|e| e.into_inner());
        let i = t.taken.len();
        let c = t.prefix.get(i).copied().unwrap_or(0);
        t.taken.push((c, n));
        c
    }
}

/// Calls `visit` on every execution of `p` under the serial semantics:
/// every choice of next session and of read source.
pub fn serial_explore(
    p: &Program,
    cfg: &StoreConfig,
    cap: usize,
    mut visit: impl FnMut(&Execution),
) -> Result<(), EnumError> {
    let mut prefix = Vec::new();
    let mut nodes = 0usize;
    loop {
        let trace = Arc::new(Mutex::new(Trace {
            prefix: prefix.clone(),
            taken: Vec::new(),
        }));
        let exec = execute_with(p, cfg, Box::new(Replay(Arc::clone(&trace))))?;
        visit(&exec);
        let taken = std::mem::take(&mut trace.lock().unwrap_or_else(|e| e.into_inner()).taken);
        nodes += taken.len().max(1);
        if nodes > cap {
            return Err(EnumError::BudgetExceeded { cap });
        }
        let Some(i) = taken.iter().rposition(|(c, n)| c + 1 < *n) else {
            return Ok(());
        };
        prefix = taken[..i].iter().map(|(c, _)| *c).collect();
        prefix.push(taken[i].0 + 1);
    }
}

/// All histories of `p` under the serial semantics at `level`.
pub fn serial_enumerate(p: &Program, level: &IsolationLevel) -> Result<HistorySet, EnumError> {
    serial_enumerate_with(p, &StoreConfig::new(level.clone()), DEFAULT_NODE_CAP)
}

pub fn serial_enumerate_with(p: &Program, cfg: &StoreConfig, cap: usize) -> Result<HistorySet, EnumError> {
    let mut set = HistorySet::new();
    serial_explore(p, cfg, cap, |e| {
        set.insert(&e.history);
    })?;
    Ok(set)
}

#[derive(Clone)]
struct Live<'p> {
    txn: TxnId,
    /// Remaining instructions, next one last.
    stack: Vec<&'p Instr>,
    locals: BTreeMap<String, Value>,
}

#[derive(Clone)]
struct Config<'p> {
    h: History,
    next: Vec<usize>,
    vars: Vec<BTreeMap<String, Value>>,
    live: Vec<Option<Live<'p>>>,
}

impl<'p> Config<'p> {
    fn done(&self, p: &Program, s: usize) -> bool {
        self.live[s].is_none() && self.next[s] == p.sessions[s].len()
    }

    fn eval(&self, s: usize, e: &crate::executor::Expr) -> Value {
        let live = self.live[s].as_ref().expect("running transaction");
        e.eval(&|name| {
            live.locals
                .get(name)
                .or_else(|| self.vars[s].get(name))
                .cloned()
                .unwrap_or(Value::Null)
        })
    }

    fn key(&self, s: usize, e: &crate::executor::Expr) -> Result<Key, ExecError> {
        Key::new(self.eval(s, e).key_text()).map_err(|_| ExecError::InvalidKey)
    }

    fn assign(&mut self, s: usize, var: &str, value: Value, scope: Scope) {
        let live = self.live[s].as_mut().expect("running transaction");
        match scope {
            Scope::Txn => {
                live.locals.insert(var.to_owned(), value);
            }
            Scope::Session => {
                live.locals.remove(var);
                self.vars[s].insert(var.to_owned(), value);
            }
        }
    }

    /// Runs session `s` through local steps up to and including its next
    /// visible event: an external read (one successor per committed
    /// writer of the key) or a commit.
    fn advance(mut self, p: &'p Program, s: usize) -> Result<Vec<Config<'p>>, ExecError> {
        if self.live[s].is_none() {
            let txn = self.h.begin_txn(SessionId(s))?;
            let body = &p.sessions[s][self.next[s]];
            self.next[s] += 1;
            self.live[s] = Some(Live {
                txn,
                stack: body.iter().rev().collect(),
                locals: BTreeMap::new(),
            });
        }
        loop {
            let live = self.live[s].as_mut().expect("running transaction");
            let txn = live.txn;
            let Some(instr) = live.stack.pop() else {
                self.h.commit(txn)?;
                self.live[s] = None;
                return Ok(vec![self]);
            };
            match instr {
                Instr::Write { key, value } => {
                    let key = self.key(s, key)?;
                    let value = self.eval(s, value);
                    self.h.append_write(txn, key, value)?;
                }
                Instr::Assign { var, expr, scope } => {
                    let value = self.eval(s, expr);
                    self.assign(s, var, value, *scope);
                }
                Instr::If { guard, then } => {
                    if self.eval(s, guard).is_true() {
                        let live = self.live[s].as_mut().expect("running transaction");
                        live.stack.extend(then.iter().rev());
                    }
                }
                Instr::Read { var, key, scope } => {
                    let key = self.key(s, key)?;
                    if let Some((_, value)) = self.h.append_local_read(txn, &key)? {
                        self.assign(s, var, value, *scope);
                        continue;
                    }
                    let mut out = Vec::new();
                    for source in self.h.txn_ids() {
                        if source == txn || !self.h.is_committed(source) {
                            continue;
                        }
                        let Some(value) = self.h.final_write(source, &key).cloned() else {
                            continue;
                        };
                        let mut next = self.clone();
                        next.h.append_read(txn, key.clone(), value.clone(), source)?;
                        next.assign(s, var, value, *scope);
                        out.push(next);
                    }
                    return Ok(out);
                }
            }
        }
    }
}

/// All histories of `p` under the baseline semantics that satisfy `level`.
pub fn baseline_enumerate(p: &Program, level: &IsolationLevel) -> Result<HistorySet, EnumError> {
    baseline_enumerate_with(p, &StoreConfig::new(level.clone()), DEFAULT_NODE_CAP)
}

/// Explores every interleaving of the sessions' visible events (external
/// reads and commits) and every committed source for each external read.
/// Steps that other sessions cannot observe run eagerly, and revisited
/// configurations are skipped; neither changes the set of final histories.
pub fn baseline_enumerate_with(p: &Program, cfg: &StoreConfig, cap: usize) -> Result<HistorySet, EnumError> {
    let cfg = effective_config(p, cfg);
    let n = p.sessions.len();
    let start = Config {
        h: History::with_initial_values(cfg.default_value.clone(), cfg.initial_values.clone()),
        next: vec![0; n],
        vars: vec![BTreeMap::new(); n],
        live: vec![None; n],
    };
    let mut seen: HashSet<CanonicalHistory> = HashSet::new();
    let mut finals: BTreeMap<CanonicalHistory, bool> = BTreeMap::new();
    let mut stack = vec![start];
    let mut nodes = 0usize;
    while let Some(c) = stack.pop() {
        let movable: Vec<usize> = (0..n).filter(|s| !c.done(p, *s)).collect();
        if movable.is_empty() {
            finals
                .entry(CanonicalHistory::of(&c.h))
                .or_insert_with(|| satisfies(&c.h, &cfg.level).satisfied);
            continue;
        }
        for s in movable {
            nodes += 1;
            if nodes > cap {
                return Err(EnumError::BudgetExceeded { cap });
            }
            for next in c.clone().advance(p, s)? {
                if seen.insert(CanonicalHistory::of(&next.h)) {
                    stack.push(next);
                }
            }
        }
    }
    let mut set = HistorySet::new();
    for (h, ok) in finals {
        if ok {
            set.insert_canonical(h);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::Expr;
    use crate::isolation::LevelKind;
    use crate::testkit::canonical::{CanonOp, Source};

    /// Each session writes its own key, then reads the other's.
    fn store_buffer() -> Program {
        let t = |w: &str, r: &str| vec![Instr::write(w, 1), Instr::read("x", r)];
        Program {
            sessions: vec![vec![t("k1", "k2")], vec![t("k2", "k1")]],
            ..Program::default()
        }
    }

    fn both_zero(c: &CanonicalHistory) -> bool {
        c.sessions.iter().all(|s| {
            s[0].ops.iter().any(|op| matches!(op, CanonOp::Read(_, Value::Int(0), Source::Init)))
        })
    }

    #[test]
    fn store_buffer_sets() {
        let p = store_buffer();
        let causal = serial_enumerate(&p, &LevelKind::Causal.level()).unwrap();
        assert!(causal.iter().any(both_zero));
        assert_eq!(causal, baseline_enumerate(&p, &LevelKind::Causal.level()).unwrap());
        let ser = serial_enumerate(&p, &LevelKind::Serializability.level()).unwrap();
        assert!(!ser.iter().any(both_zero));
        assert_eq!(ser, baseline_enumerate(&p, &LevelKind::Serializability.level()).unwrap());
        assert_eq!(ser.len(), 2);
        assert_eq!(causal.len(), 3);
    }

    #[test]
    fn single_transaction_has_one_history() {
        let p = Program {
            sessions: vec![vec![vec![
                Instr::read("x", "a"),
                Instr::when(Expr::eq(Expr::var("x"), 0), vec![Instr::write("a", 1)]),
                Instr::read("y", "a"),
            ]]],
            ..Program::default()
        };
        for kind in LevelKind::ALL {
            assert_eq!(serial_enumerate(&p, &kind.level()).unwrap().len(), 1);
            assert_eq!(baseline_enumerate(&p, &kind.level()).unwrap().len(), 1);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = store_buffer();
        let cfg = StoreConfig::new(LevelKind::Causal);
        assert_eq!(
            serial_enumerate_with(&p, &cfg, 3),
            Err(EnumError::BudgetExceeded { cap: 3 })
        );
        assert_eq!(
            baseline_enumerate_with(&p, &cfg, 3),
            Err(EnumError::BudgetExceeded { cap: 3 })
        );
    }
}
