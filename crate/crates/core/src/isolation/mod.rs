//! Axiomatic isolation levels and history checking.
//!
//! Every axiom has the shape
//!
//! ```text
//! ∀ key x, ∀ t1 ≠ t2, ∀ α.
//!     (t1, α) ∈ wr_x  ∧  t2 writes x  ∧  φ(t2, α)   ⇒   (t2, t1) ∈ co
//! ```
//!
//! where `α` is either the reading transaction or the read operation itself,
//! and `φ` is built from the primitive relations `so`, `wr`, `po` and `co`
//! with union, composition and transitive closure. A level is a list of such
//! axioms; a history satisfies it when some strict total order `co`
//! extending `so ∪ wr` validates all of them.
//!
//! Levels whose `φ` never mentions `co` are decided by saturation: compute
//! every forced `(t2, t1)` edge and test `so ∪ wr ∪ forced` for a cycle.
//! Levels that mention `co` are decided by saturating with the partial order
//! known so far and then searching commit orders, pruning any prefix that
//! already violates an axiom.

mod bitrel;
mod brute;
mod check;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{OpId, TxnId};
use crate::value::Key;

pub use bitrel::{BitRel, Bits};
pub use brute::{brute_force_satisfies, DEFAULT_BRUTE_FORCE_CAP};
pub use check::{derived_edges, satisfies, satisfies_with_order, valid_read_sources, Verdict};

/// A relation between transactions, used to build axiom premises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rel {
    /// Session order (transitive; the initial transaction precedes all).
    So,
    /// Write-read relation lifted to transactions.
    Wr,
    /// The commit order under test.
    Co,
    /// Distinct transactions that both write some common key.
    SameKeyWrites,
    Identity,
    Union(Box<Rel>, Box<Rel>),
    /// `a ∘ b` = `{(x, z) | (x, y) ∈ a, (y, z) ∈ b}`.
    Compose(Box<Rel>, Box<Rel>),
    Plus(Box<Rel>),
    Star(Box<Rel>),
}

impl Rel {
    pub fn union(a: Rel, b: Rel) -> Rel {
        Rel::Union(Box::new(a), Box::new(b))
    }

    pub fn compose(a: Rel, b: Rel) -> Rel {
        Rel::Compose(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Rel) -> Rel {
        Rel::Plus(Box::new(a))
    }

    pub fn star(a: Rel) -> Rel {
        Rel::Star(Box::new(a))
    }

    pub fn mentions_co(&self) -> bool {
        match self {
            Rel::Co => true,
            Rel::So | Rel::Wr | Rel::SameKeyWrites | Rel::Identity => false,
            Rel::Union(a, b) | Rel::Compose(a, b) => a.mentions_co() || b.mentions_co(),
            Rel::Plus(a) | Rel::Star(a) => a.mentions_co(),
        }
    }
}

/// The premise `φ(t2, α)` of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phi {
    /// `α` is the reading transaction `t3`: `(t2, t3) ∈ rel`.
    Txn(Rel),
    /// `α` is the read itself: `(t2, α) ∈ rel ∘ wr ∘ po`, i.e. `t2` is
    /// `rel`-related to the source of some external read that precedes `α`
    /// in its transaction.
    EarlierRead(Rel),
}

impl Phi {
    pub fn mentions_co(&self) -> bool {
        match self {
            Phi::Txn(r) | Phi::EarlierRead(r) => r.mentions_co(),
        }
    }

    fn rel(&self) -> &Rel {
        match self {
            Phi::Txn(r) | Phi::EarlierRead(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axiom {
    pub name: String,
    pub phi: Phi,
}

impl Axiom {
    pub fn new(name: impl Into<String>, phi: Phi) -> Self {
        Axiom {
            name: name.into(),
            phi,
        }
    }
}

/// The built-in levels, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelKind {
    ReadCommitted,
    Causal,
    Serializability,
}

impl LevelKind {
    pub const ALL: [LevelKind; 3] = [
        LevelKind::ReadCommitted,
        LevelKind::Causal,
        LevelKind::Serializability,
    ];

    pub fn level(self) -> IsolationLevel {
        match self {
            LevelKind::ReadCommitted => IsolationLevel::read_committed(),
            LevelKind::Causal => IsolationLevel::causal(),
            LevelKind::Serializability => IsolationLevel::serializability(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LevelKind::ReadCommitted => "read-committed",
            LevelKind::Causal => "causal",
            LevelKind::Serializability => "serializability",
        }
    }
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown isolation level {0:?} (expected read-committed, causal or serializability)")]
pub struct UnknownLevel(pub String);

impl FromStr for LevelKind {
    type Err = UnknownLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "read-committed" | "rc" => Ok(LevelKind::ReadCommitted),
            "causal" | "cc" => Ok(LevelKind::Causal),
            "serializability" | "serializable" | "ser" => Ok(LevelKind::Serializability),
            _ => Err(UnknownLevel(s.to_owned())),
        }
    }
}

/// A named conjunction of axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationLevel {
    pub name: String,
    pub axioms: Vec<Axiom>,
}

impl IsolationLevel {
    pub fn new(name: impl Into<String>, axioms: Vec<Axiom>) -> Self {
        IsolationLevel {
            name: name.into(),
            axioms,
        }
    }

    /// Reads in a transaction never go back in commit order:
    /// `φ(t2, α) = (t2, α) ∈ wr ∘ po`.
    pub fn read_committed() -> Self {
        IsolationLevel::new(
            "Read Committed",
            vec![Axiom::new("Read Committed", Phi::EarlierRead(Rel::Identity))],
        )
    }

    /// Writers in the causal past of the reader are not overwritten by
    /// older values: `φ(t2, t3) = (t2, t3) ∈ (wr ∪ so)+`.
    pub fn causal() -> Self {
        IsolationLevel::new(
            "Causal",
            vec![Axiom::new(
                "Causal",
                Phi::Txn(Rel::plus(Rel::union(Rel::Wr, Rel::So))),
            )],
        )
    }

    /// Every transaction observes all its commit-order predecessors:
    /// `φ(t2, t3) = (t2, t3) ∈ co`.
    pub fn serializability() -> Self {
        IsolationLevel::new(
            "Serializability",
            vec![Axiom::new("Serializability", Phi::Txn(Rel::Co))],
        )
    }

    pub fn co_dependent(&self) -> bool {
        self.axioms.iter().any(|a| a.phi.mentions_co())
    }

    /// Whether every commit-order dependent axiom has `φ = co` exactly. For
    /// such levels the remaining obligations of a commit-order prefix depend
    /// only on the placed set and the last writer of each key.
    pub(crate) fn last_writer_summarizes(&self) -> bool {
        self.axioms
            .iter()
            .filter(|a| a.phi.mentions_co())
            .all(|a| a.phi == Phi::Txn(Rel::Co))
    }
}

impl From<LevelKind> for IsolationLevel {
    fn from(kind: LevelKind) -> Self {
        kind.level()
    }
}

/// What an axiom instance quantified over as `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    Read(OpId),
    Txn(TxnId),
}

/// Why a history fails a level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: String,
    pub key: Option<Key>,
    /// The transaction read from.
    pub t1: Option<TxnId>,
    /// The writer forced before `t1`.
    pub t2: Option<TxnId>,
    pub alpha: Option<Alpha>,
    /// Closed path in the must-precede graph, when one exists.
    pub cycle: Option<Vec<TxnId>>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated", self.axiom)?;
        if let (Some(t1), Some(t2)) = (self.t1, self.t2) {
            write!(f, ": {t2} must commit before {t1}")?;
        }
        if let Some(key) = &self.key {
            write!(f, " (key {key})")?;
        }
        if let Some(cycle) = &self.cycle {
            let path: Vec<String> = cycle.iter().map(ToString::to_string).collect();
            write!(f, "; cycle {}", path.join(" -> "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsolationError {
    #[error("level {0} needs a commit order")]
    MissingCommitOrder(String),
    #[error("commit order does not cover the history: {0}")]
    CoverageMismatch(String),
    #[error("history has {size} transactions, above the brute-force cap of {cap}")]
    TooLarge { size: usize, cap: usize },
}
