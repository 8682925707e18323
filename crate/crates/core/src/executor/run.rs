use std::collections::BTreeMap;

use super::{Chooser, ExecError, Instr, Program, RandomChooser, Scope, Store, StoreConfig};
use crate::history::{History, SessionId};
use crate::value::{Key, Value};

/// The outcome of running a program to completion.
#[derive(Debug, Clone)]
pub struct Execution {
    pub history: History,
    /// Final session-scope variables, per session.
    pub session_vars: Vec<BTreeMap<String, Value>>,
}

/// Runs `p` under the serial semantics, choosing sessions and read sources
/// with the generator seeded by `cfg.seed`.
pub fn run_program(p: &Program, cfg: &StoreConfig) -> Result<History, ExecError> {
    Ok(execute(p, cfg)?.history)
}

pub fn execute(p: &Program, cfg: &StoreConfig) -> Result<Execution, ExecError> {
    execute_with(p, cfg, Box::new(RandomChooser::seeded(cfg.seed)))
}

/// Like [`execute`], with an explicit source of choices.
pub fn execute_with(
    p: &Program,
    cfg: &StoreConfig,
    chooser: Box<dyn Chooser>,
) -> Result<Execution, ExecError> {
    let cfg = effective_config(p, cfg);
    let mut store = Store::with_chooser(cfg, chooser);
    let sessions: Vec<SessionId> = p.sessions.iter().map(|_| store.open_session()).collect();
    let mut next = vec![0usize; p.sessions.len()];
    let mut session_vars = vec![BTreeMap::new(); p.sessions.len()];
    loop {
        let ready: Vec<usize> = (0..p.sessions.len())
            .filter(|i| next[*i] < p.sessions[*i].len())
            .collect();
        if ready.is_empty() {
            break;
        }
        let i = ready[store.choose(ready.len())];
        let txn = &p.sessions[i][next[i]];
        next[i] += 1;
        let s = sessions[i];
        store.begin(s)?;
        let mut frame = Frame {
            locals: BTreeMap::new(),
            session: &mut session_vars[i],
        };
        for instr in txn {
            step(&mut store, s, &mut frame, instr)?;
        }
        store.commit(s)?;
    }
    Ok(Execution {
        history: store.into_history(),
        session_vars,
    })
}

/// `cfg` with the program's own initial values applied on top.
pub fn effective_config(p: &Program, cfg: &StoreConfig) -> StoreConfig {
    let mut cfg = cfg.clone();
    if let Some(init) = &p.init {
        if let Some(d) = &init.default {
            cfg.default_value = d.clone();
        }
        cfg.initial_values
            .extend(init.values.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    cfg
}

/// Variable valuation of the running transaction.
pub(crate) struct Frame<'a> {
    pub locals: BTreeMap<String, Value>,
    pub session: &'a mut BTreeMap<String, Value>,
}

impl Frame<'_> {
    pub fn lookup(&self, name: &str) -> Value {
        self.locals
            .get(name)
            .or_else(|| self.session.get(name))
            .cloned()
            .unwrap_or(Value::Null)
    }

    pub fn assign(&mut self, var: &str, value: Value, scope: Scope) {
        match scope {
            Scope::Txn => self.locals.insert(var.to_owned(), value),
            Scope::Session => {
                self.locals.remove(var);
                self.session.insert(var.to_owned(), value)
            }
        };
    }

    pub fn eval(&self, e: &super::Expr) -> Value {
        e.eval(&|name| self.lookup(name))
    }

    pub fn eval_key(&self, e: &super::Expr) -> Result<Key, ExecError> {
        Key::new(self.eval(e).key_text()).map_err(|_| ExecError::InvalidKey)
    }
}

fn step(store: &mut Store, s: SessionId, frame: &mut Frame<'_>, instr: &Instr) -> Result<(), ExecError> {
    match instr {
        Instr::Write { key, value } => {
            let key = frame.eval_key(key)?;
            let value = frame.eval(value);
            store.write(s, key, value)
        }
        Instr::Read { var, key, scope } => {
            let key = frame.eval_key(key)?;
            let value = store.read(s, &key)?;
            frame.assign(var, value, *scope);
            Ok(())
        }
        Instr::Assign { var, expr, scope } => {
            let value = frame.eval(expr);
            frame.assign(var, value, *scope);
            Ok(())
        }
        Instr::If { guard, then } => {
            if frame.eval(guard).is_true() {
                for i in then {
                    step(store, s, frame, i)?;
                }
            }
            Ok(())
        }
    }
}
