use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::value::{Key, Value};

/// A client program: per session, a sequence of transactions, each a
/// sequence of instructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Program {
    pub sessions: Vec<Vec<Vec<Instr>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
}

/// Initial store contents a program expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    /// An explicit `null` sets the default to null; an absent field keeps
    /// the store's default.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "present")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<Key, Value>,
}

fn present<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Value>, D::Error> {
    Value::deserialize(d).map(Some)
}

/// Where an assigned variable lives. Transaction variables are dropped at
/// the next `begin`; session variables persist across the session's
/// transactions and are visible to assertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Txn,
    Session,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Instr {
    Write {
        key: Expr,
        value: Expr,
    },
    Read {
        var: String,
        key: Expr,
        #[serde(default, skip_serializing_if = "is_txn")]
        scope: Scope,
    },
    Assign {
        var: String,
        expr: Expr,
        #[serde(default, skip_serializing_if = "is_txn")]
        scope: Scope,
    },
    If {
        guard: Expr,
        then: Vec<Instr>,
    },
}

fn is_txn(s: &Scope) -> bool {
    *s == Scope::Txn
}

impl Instr {
    pub fn write(key: impl Into<Expr>, value: impl Into<Expr>) -> Instr {
        Instr::Write {
            key: key.into(),
            value: value.into(),
        }
    }

    pub fn read(var: &str, key: impl Into<Expr>) -> Instr {
        Instr::Read {
            var: var.into(),
            key: key.into(),
            scope: Scope::Txn,
        }
    }

    pub fn read_into_session(var: &str, key: impl Into<Expr>) -> Instr {
        Instr::Read {
            var: var.into(),
            key: key.into(),
            scope: Scope::Session,
        }
    }

    pub fn assign(var: &str, expr: impl Into<Expr>) -> Instr {
        Instr::Assign {
            var: var.into(),
            expr: expr.into(),
            scope: Scope::Txn,
        }
    }

    pub fn assign_session(var: &str, expr: impl Into<Expr>) -> Instr {
        Instr::Assign {
            var: var.into(),
            expr: expr.into(),
            scope: Scope::Session,
        }
    }

    pub fn when(guard: Expr, then: Vec<Instr>) -> Instr {
        Instr::If { guard, then }
    }
}

/// Side-effect free expressions. Evaluation is total: ill-typed operands
/// give `null` (or `false` for comparisons).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(Value),
    Var(String),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// List literal.
    List(Vec<Expr>),
    /// Multiset union of two lists (concatenation).
    Union(Box<Expr>, Box<Expr>),
    /// The list without any occurrence of the element.
    Remove(Box<Expr>, Box<Expr>),
    Contains(Box<Expr>, Box<Expr>),
    Len(Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    /// String concatenation of the operands' key text.
    Concat(Vec<Expr>),
}

impl From<Value> for Expr {
    fn from(v: Value) -> Self {
        Expr::Const(v)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::Const(Value::Int(v))
    }
}

impl From<&str> for Expr {
    fn from(s: &str) -> Self {
        Expr::Const(Value::str(s))
    }
}

impl From<bool> for Expr {
    fn from(b: bool) -> Self {
        Expr::Const(Value::Bool(b))
    }
}

fn b(e: impl Into<Expr>) -> Box<Expr> {
    Box::new(e.into())
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    pub fn eq(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Eq(b(a), b(c))
    }

    pub fn ne(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Ne(b(a), b(c))
    }

    pub fn lt(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Lt(b(a), b(c))
    }

    pub fn le(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Le(b(a), b(c))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: impl Into<Expr>) -> Expr {
        Expr::Not(b(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Add(b(a), b(c))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Sub(b(a), b(c))
    }

    pub fn union(a: impl Into<Expr>, c: impl Into<Expr>) -> Expr {
        Expr::Union(b(a), b(c))
    }

    pub fn remove(list: impl Into<Expr>, item: impl Into<Expr>) -> Expr {
        Expr::Remove(b(list), b(item))
    }

    pub fn contains(list: impl Into<Expr>, item: impl Into<Expr>) -> Expr {
        Expr::Contains(b(list), b(item))
    }

    pub fn len(list: impl Into<Expr>) -> Expr {
        Expr::Len(b(list))
    }

    pub fn index(list: impl Into<Expr>, i: impl Into<Expr>) -> Expr {
        Expr::Index(b(list), b(i))
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Value) -> Value {
        let ev = |e: &Expr| e.eval(env);
        match self {
            Expr::Const(v) => v.clone(),
            Expr::Var(name) => env(name),
            Expr::Eq(a, c) => Value::Bool(ev(a) == ev(c)),
            Expr::Ne(a, c) => Value::Bool(ev(a) != ev(c)),
            Expr::Lt(a, c) => Value::Bool(compare(&ev(a), &ev(c)).is_some_and(|o| o.is_lt())),
            Expr::Le(a, c) => Value::Bool(compare(&ev(a), &ev(c)).is_some_and(|o| o.is_le())),
            Expr::Not(a) => Value::Bool(!ev(a).is_true()),
            Expr::And(xs) => Value::Bool(xs.iter().all(|x| ev(x).is_true())),
            Expr::Or(xs) => Value::Bool(xs.iter().any(|x| ev(x).is_true())),
            Expr::Add(a, c) => match (ev(a), ev(c)) {
                (Value::Int(x), Value::Int(y)) => x.checked_add(y).map_or(Value::Null, Value::Int),
                _ => Value::Null,
            },
            Expr::Sub(a, c) => match (ev(a), ev(c)) {
                (Value::Int(x), Value::Int(y)) => x.checked_sub(y).map_or(Value::Null, Value::Int),
                _ => Value::Null,
            },
            Expr::List(xs) => Value::List(xs.iter().map(ev).collect()),
            Expr::Union(a, c) => match (ev(a), ev(c)) {
                (Value::List(mut x), Value::List(y)) => {
                    x.extend(y);
                    Value::List(x)
                }
                _ => Value::Null,
            },
            Expr::Remove(a, c) => match ev(a) {
                Value::List(x) => {
                    let item = ev(c);
                    Value::List(x.into_iter().filter(|v| *v != item).collect())
                }
                _ => Value::Null,
            },
            Expr::Contains(a, c) => {
                let item = ev(c);
                Value::Bool(ev(a).as_list().is_some_and(|x| x.contains(&item)))
            }
            Expr::Len(a) => match ev(a) {
                Value::List(x) => Value::Int(x.len() as i64),
                _ => Value::Null,
            },
            Expr::Index(a, c) => match (ev(a), ev(c)) {
                (Value::List(x), Value::Int(i)) => usize::try_from(i)
                    .ok()
                    .and_then(|i| x.get(i).cloned())
                    .unwrap_or(Value::Null),
                _ => Value::Null,
            },
            Expr::Concat(xs) => Value::Str(xs.iter().map(|x| ev(x).key_text()).collect()),
        }
    }
}

fn compare(a: &Value, c: &Value) -> Option<std::cmp::Ordering> {
    match (a, c) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// A named predicate over the final session variables of a run, which are
/// bound as `s<i>.<name>`. A run fails the assertion when it evaluates to
/// anything but `true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub name: String,
    pub predicate: Expr,
}

impl Program {
    pub fn from_json(text: &str) -> Result<Program, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("programs serialize")
    }

    pub fn txn_count(&self) -> usize {
        self.sessions.iter().map(Vec::len).sum()
    }

    /// Evaluates every assertion; returns the names of those that fail.
    pub fn failed_assertions(&self, session_vars: &[BTreeMap<String, Value>]) -> Vec<String> {
        let env = |name: &str| -> Value {
            let Some((s, var)) = name.split_once('.') else {
                return Value::Null;
            };
            s.strip_prefix('s')
                .and_then(|i| i.parse::<usize>().ok())
                .and_then(|i| session_vars.get(i))
                .and_then(|vars| vars.get(var))
                .cloned()
                .unwrap_or(Value::Null)
        };
        self.assertions
            .iter()
            .filter(|a| !a.predicate.eval(&env).is_true())
            .map(|a| a.name.clone())
            .collect()
    }
}
