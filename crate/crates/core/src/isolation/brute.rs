//! Reference decision procedure: enumerate every total order extending
//! so ∪ wr and evaluate the axioms literally over sets of transaction pairs.
//! Shares nothing with the saturation engine beyond the level description.

use std::collections::{BTreeMap, BTreeSet};

use super::{IsolationError, IsolationLevel, Phi, Rel};
use crate::history::{History, TxnId};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 8;

type Pairs = BTreeSet<(TxnId, TxnId)>;

/// Exhaustive check of `level` on histories of at most `cap` transactions
/// (the initial transaction included).
pub fn brute_force_satisfies(
    h: &History,
    level: &IsolationLevel,
    cap: usize,
) -> Result<bool, IsolationError> {
    if h.len() > cap {
        return Err(IsolationError::TooLarge { size: h.len(), cap });
    }
    let ids = h.txn_ids();
    let mut edges = h.so_pairs();
    edges.extend(h.lift_wr(None));
    let mut order = Vec::with_capacity(ids.len());
    Ok(extend(h, level, &ids, &edges, &mut order))
}

fn extend(
    h: &History,
    level: &IsolationLevel,
    ids: &[TxnId],
    edges: &Pairs,
    order: &mut Vec<TxnId>,
) -> bool {
    if order.len() == ids.len() {
        return holds(h, level, order);
    }
    for t in ids {
        if order.contains(t) {
            continue;
        }
        let ready = edges
            .iter()
            .filter(|(_, b)| b == t)
            .all(|(a, _)| order.contains(a));
        if !ready {
            continue;
        }
        order.push(*t);
        if extend(h, level, ids, edges, order) {
            return true;
        }
        order.pop();
    }
    false
}

fn holds(h: &History, level: &IsolationLevel, order: &[TxnId]) -> bool {
    let pos: BTreeMap<TxnId, usize> = order.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let co: Pairs = order
        .iter()
        .enumerate()
        .flat_map(|(i, a)| order[i + 1..].iter().map(move |b| (*a, *b)))
        .collect();
    for axiom in &level.axioms {
        let rel = match &axiom.phi {
            Phi::Txn(r) | Phi::EarlierRead(r) => eval(h, r, &co),
        };
        for t3 in h.txns() {
            let mut earlier_sources: Vec<TxnId> = Vec::new();
            for alpha in t3.reads() {
                let t1 = h.wr_source(alpha.id).expect("external reads have a source");
                for t2 in h.txn_ids() {
                    if t2 == t1 || !h.writes_key(t2, &alpha.key) {
                        continue;
                    }
                    let premise = match axiom.phi {
                        Phi::Txn(_) => rel.contains(&(t2, t3.id)),
                        Phi::EarlierRead(_) => {
                            earlier_sources.iter().any(|s| rel.contains(&(t2, *s)))
                        }
                    };
                    if premise && pos[&t2] > pos[&t1] {
                        return false;
                    }
                }
                earlier_sources.push(t1);
            }
        }
    }
    true
}

fn eval(h: &History, rel: &Rel, co: &Pairs) -> Pairs {
    match rel {
        Rel::So => h.so_pairs(),
        Rel::Wr => h.lift_wr(None),
        Rel::Co => co.clone(),
        Rel::Identity => h.txn_ids().into_iter().map(|t| (t, t)).collect(),
        Rel::SameKeyWrites => {
            let ids = h.txn_ids();
            let mut out = Pairs::new();
            for a in &ids {
                for b in &ids {
                    if a == b {
                        continue;
                    }
                    let shared = [*a, *b]
                        .iter()
                        .flat_map(|t| h.txn(*t).into_iter().flat_map(|l| l.writes()))
                        .any(|op| h.writes_key(*a, &op.key) && h.writes_key(*b, &op.key));
                    if shared {
                        out.insert((*a, *b));
                    }
                }
            }
            out
        }
        Rel::Union(a, b) => {
            let mut out = eval(h, a, co);
            out.extend(eval(h, b, co));
            out
        }
        Rel::Compose(a, b) => compose(&eval(h, a, co), &eval(h, b, co)),
        Rel::Plus(a) => closure(eval(h, a, co)),
        Rel::Star(a) => {
            let mut out = closure(eval(h, a, co));
            out.extend(h.txn_ids().into_iter().map(|t| (t, t)));
            out
        }
    }
}

fn compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for (x, y) in a {
        for (y2, z) in b {
            if y == y2 {
                out.insert((*x, *z));
            }
        }
    }
    out
}

fn closure(mut rel: Pairs) -> Pairs {
    loop {
        let step = compose(&rel, &rel);
        let before = rel.len();
        rel.extend(step);
        if rel.len() == before {
            return rel;
        }
    }
}
