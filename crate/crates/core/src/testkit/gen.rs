//! Random small histories and programs over a two-key, two-value alphabet.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::executor::{Expr, Instr, Program};
use crate::history::{History, HistoryDoc, InitDoc, OpDoc, OpTag, TxnDoc, WrDoc};
use crate::value::{Key, Value};

pub const KEYS: [&str; 2] = ["a", "b"];
pub const VALUES: [i64; 2] = [1, 2];

#[derive(Debug, Clone, Copy)]
pub struct HistoryShape {
    pub max_txns: usize,
    pub max_ops: usize,
    pub max_sessions: usize,
}

impl Default for HistoryShape {
    fn default() -> Self {
        HistoryShape {
            max_txns: 6,
            max_ops: 3,
            max_sessions: 3,
        }
    }
}

/// A structurally valid history whose write-read edges are drawn
/// uniformly from the writers of the read value, so it may or may not
/// satisfy any given level (and may have a cyclic so ∪ wr).
pub fn random_history<R: Rng + ?Sized>(rng: &mut R, shape: HistoryShape) -> History {
    let n = rng.gen_range(1..=shape.max_txns);
    let sessions = rng.gen_range(1..=shape.max_sessions.min(n));
    // Txn ids start at 1; 0 is the initial transaction.
    let mut plans: Vec<Vec<(OpTag, usize, i64)>> = Vec::with_capacity(n);
    for _ in 0..n {
        let ops = rng.gen_range(1..=shape.max_ops);
        plans.push(
            (0..ops)
                .map(|_| {
                    let tag = if rng.gen_bool(0.5) { OpTag::Read } else { OpTag::Write };
                    (tag, rng.gen_range(0..KEYS.len()), VALUES[rng.gen_range(0..VALUES.len())])
                })
                .collect(),
        );
    }
    let final_write = |t: usize, key: usize| -> Option<i64> {
        plans[t]
            .iter()
            .rev()
            .find(|(tag, k, _)| *tag == OpTag::Write && *k == key)
            .map(|(_, _, v)| *v)
    };
    let mut owner: Vec<usize> = (0..n).map(|i| if i < sessions { i } else { rng.gen_range(0..sessions) }).collect();
    owner.shuffle(rng);

    let mut docs: Vec<Vec<TxnDoc>> = vec![Vec::new(); sessions];
    let mut wr = Vec::new();
    let mut next_op = 1u64;
    for (t, plan) in plans.iter().enumerate() {
        let mut ops = Vec::new();
        let mut own: BTreeMap<usize, i64> = BTreeMap::new();
        for (tag, key, value) in plan {
            let id = next_op;
            next_op += 1;
            let value = match tag {
                OpTag::Write => {
                    own.insert(*key, *value);
                    *value
                }
                OpTag::Read => match own.get(key) {
                    Some(v) => *v,
                    None => {
                        let mut sources: Vec<(u64, i64)> = vec![(0, 0)];
                        for (u, _) in plans.iter().enumerate() {
                            if u != t {
                                if let Some(v) = final_write(u, *key) {
                                    sources.push((u as u64 + 1, v));
                                }
                            }
                        }
                        let (src, v) = sources[rng.gen_range(0..sources.len())];
                        wr.push(WrDoc {
                            read_op: id,
                            source_txn: src,
                        });
                        v
                    }
                },
            };
            ops.push(OpDoc {
                op: *tag,
                key: Key::named(KEYS[*key]),
                value: Value::Int(value),
                id,
            });
        }
        docs[owner[t]].push(TxnDoc {
            id: t as u64 + 1,
            ops,
            committed: true,
        });
    }
    let doc = HistoryDoc {
        sessions: docs,
        wr,
        init: InitDoc {
            txn: 0,
            default: Value::Int(0),
            values: BTreeMap::new(),
        },
    };
    History::from_doc(doc).expect("generated history is well formed")
}

#[derive(Debug, Clone, Copy)]
pub struct ProgramShape {
    pub min_sessions: usize,
    pub max_sessions: usize,
    pub max_txns: usize,
    pub max_instrs: usize,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            min_sessions: 1,
            max_sessions: 2,
            max_txns: 2,
            max_instrs: 3,
        }
    }
}

/// A random program whose guards only test read variables for equality
/// with a constant.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, shape: ProgramShape) -> Program {
    let key = |rng: &mut R| Expr::from(KEYS[rng.gen_range(0..KEYS.len())]);
    let value = |rng: &mut R| Expr::from(VALUES[rng.gen_range(0..VALUES.len())]);
    let sessions = (0..rng.gen_range(shape.min_sessions..=shape.max_sessions))
        .map(|_| {
            (0..rng.gen_range(1..=shape.max_txns))
                .map(|_| {
                    let mut vars: Vec<String> = Vec::new();
                    (0..rng.gen_range(1..=shape.max_instrs))
                        .map(|_| match rng.gen_range(0..3) {
                            0 => {
                                let var = format!("v{}", vars.len());
                                let instr = Instr::read(&var, key(rng));
                                vars.push(var);
                                instr
                            }
                            2 if !vars.is_empty() => {
                                let var = vars[rng.gen_range(0..vars.len())].clone();
                                let guard = Expr::eq(Expr::var(&var), value(rng));
                                Instr::when(guard, vec![Instr::write(key(rng), value(rng))])
                            }
                            _ => Instr::write(key(rng), value(rng)),
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Program {
        sessions,
        ..Program::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_are_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let h = random_history(&mut rng, HistoryShape::default());
            assert!(h.len() <= 7);
            assert!(h.txns().all(|t| t.ops.len() <= 3));
            let p = random_program(&mut rng, ProgramShape::default());
            assert!(p.sessions.len() <= 2);
            assert!(p.sessions.iter().all(|s| s.len() <= 2 && s.iter().all(|t| t.len() <= 3)));
        }
    }
}
