use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::bitrel::{BitRel, Bits};
use super::{Alpha, IsolationError, IsolationLevel, Phi, Rel, Violation};
use crate::graph::{find_cycle, topo_order};
use crate::history::{CommitOrder, History, OpId, TxnId};
use crate::value::{Key, Value};

/// Outcome of [`satisfies`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub satisfied: bool,
    /// A commit order validating every axiom, when satisfied.
    pub witness: Option<CommitOrder>,
    pub violation: Option<Violation>,
}

impl Verdict {
    fn ok(witness: CommitOrder) -> Self {
        Verdict {
            satisfied: true,
            witness: Some(witness),
            violation: None,
        }
    }

    fn fail(violation: Violation) -> Self {
        Verdict {
            satisfied: false,
            witness: None,
            violation: Some(violation),
        }
    }
}

struct ReadRef<'h> {
    txn: usize,
    op: OpId,
    key: &'h Key,
    source: usize,
}

#[derive(Debug, Clone, Copy)]
struct Forced {
    t2: usize,
    t1: usize,
    axiom: usize,
    read: usize,
}

/// Dense-index view of a history: transactions, session order, lifted
/// write-read relation and the external reads in program order.
struct View<'h> {
    h: &'h History,
    ids: Vec<TxnId>,
    index: BTreeMap<TxnId, usize>,
    so: BitRel,
    so_edges: Vec<(usize, usize)>,
    wr: BitRel,
    reads: Vec<ReadRef<'h>>,
    writers: BTreeMap<&'h Key, Bits>,
}

impl<'h> View<'h> {
    fn new(h: &'h History) -> Self {
        let ids = h.txn_ids();
        let n = ids.len();
        let index: BTreeMap<TxnId, usize> = ids.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let init = index[&h.init_txn()];

        let mut so = BitRel::empty(n);
        let mut so_edges = Vec::new();
        for seq in h.sessions() {
            let seq: Vec<usize> = seq.iter().map(|t| index[t]).collect();
            if let Some(first) = seq.first() {
                so_edges.push((init, *first));
            }
            for w in seq.windows(2) {
                so_edges.push((w[0], w[1]));
            }
            for (i, a) in seq.iter().enumerate() {
                so.insert(init, *a);
                for b in &seq[i + 1..] {
                    so.insert(*a, *b);
                }
            }
        }

        let mut wr = BitRel::empty(n);
        let mut reads = Vec::new();
        for (i, t) in ids.iter().enumerate() {
            let log = h.txn(*t).expect("listed transaction exists");
            for op in log.reads() {
                let Some(src) = h.wr_source(op.id).and_then(|s| index.get(&s)) else {
                    continue;
                };
                wr.insert(*src, i);
                reads.push(ReadRef {
                    txn: i,
                    op: op.id,
                    key: &op.key,
                    source: *src,
                });
            }
        }

        let mut writers: BTreeMap<&Key, Bits> = BTreeMap::new();
        for r in &reads {
            writers.entry(r.key).or_insert_with(|| {
                let mut b = Bits::new(n);
                for (i, t) in ids.iter().enumerate() {
                    if h.writes_key(*t, r.key) {
                        b.insert(i);
                    }
                }
                b
            });
        }

        View {
            h,
            ids,
            index,
            so,
            so_edges,
            wr,
            reads,
            writers,
        }
    }

    fn n(&self) -> usize {
        self.ids.len()
    }

    fn same_key_writes(&self) -> BitRel {
        let n = self.n();
        let init = self.index[&self.h.init_txn()];
        let mut by_key: BTreeMap<&Key, Bits> = BTreeMap::new();
        for (i, t) in self.ids.iter().enumerate() {
            for op in self.h.txn(*t).expect("listed").writes() {
                by_key.entry(&op.key).or_insert_with(|| {
                    let mut b = Bits::new(n);
                    b.insert(init);
                    b
                });
                by_key.get_mut(&op.key).expect("inserted").insert(i);
            }
        }
        let mut out = BitRel::empty(n);
        for ws in by_key.values() {
            for a in ws.iter() {
                for b in ws.iter() {
                    if a != b {
                        out.insert(a, b);
                    }
                }
            }
        }
        out
    }

    fn eval(
        &self,
        rel: &Rel,
        level: &IsolationLevel,
        co: Option<&BitRel>,
        mask: Option<&Bits>,
    ) -> Result<BitRel, IsolationError> {
        let leaf = |r: BitRel| match mask {
            Some(m) => r.restrict(m),
            None => r,
        };
        Ok(match rel {
            Rel::So => leaf(self.so.clone()),
            Rel::Wr => leaf(self.wr.clone()),
            Rel::Co => leaf(
                co.cloned()
                    .ok_or_else(|| IsolationError::MissingCommitOrder(level.name.clone()))?,
            ),
            Rel::SameKeyWrites => leaf(self.same_key_writes()),
            Rel::Identity => leaf(BitRel::identity(self.n())),
            Rel::Union(a, b) => self
                .eval(a, level, co, mask)?
                .union(&self.eval(b, level, co, mask)?),
            Rel::Compose(a, b) => self
                .eval(a, level, co, mask)?
                .compose(&self.eval(b, level, co, mask)?),
            Rel::Plus(a) => self.eval(a, level, co, mask)?.plus(),
            Rel::Star(a) => self.eval(a, level, co, mask)?.star(),
        })
    }

    /// Every `(t2, t1)` edge the level's axioms force, restricted to the
    /// transactions in `mask` when given.
    fn forced(
        &self,
        level: &IsolationLevel,
        co: Option<&BitRel>,
        mask: Option<&Bits>,
    ) -> Result<Vec<Forced>, IsolationError> {
        let mut out = Vec::new();
        let inside = |i: usize| mask.is_none_or(|m| m.contains(i));
        for (ai, axiom) in level.axioms.iter().enumerate() {
            let premise = self.eval(axiom.phi.rel(), level, co, mask)?.transpose();
            let mut current_txn = usize::MAX;
            let mut seen = Bits::new(self.n());
            for (ri, read) in self.reads.iter().enumerate() {
                if read.txn != current_txn {
                    current_txn = read.txn;
                    seen = Bits::new(self.n());
                }
                if !inside(read.txn) || !inside(read.source) {
                    continue;
                }
                let mut candidates = match &axiom.phi {
                    Phi::Txn(_) => premise.row(read.txn).clone(),
                    Phi::EarlierRead(_) => {
                        let mut s = Bits::new(self.n());
                        for src in seen.iter() {
                            s.union_with(premise.row(src));
                        }
                        s
                    }
                };
                seen.insert(read.source);
                candidates.intersect_with(&self.writers[read.key]);
                if let Some(m) = mask {
                    candidates.intersect_with(m);
                }
                for t2 in candidates.iter() {
                    if t2 != read.source {
                        out.push(Forced {
                            t2,
                            t1: read.source,
                            axiom: ai,
                            read: ri,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn violation_for(&self, level: &IsolationLevel, f: &Forced, cycle: Option<Vec<usize>>) -> Violation {
        let axiom = &level.axioms[f.axiom];
        let read = &self.reads[f.read];
        Violation {
            axiom: axiom.name.clone(),
            key: Some(read.key.clone()),
            t1: Some(self.ids[f.t1]),
            t2: Some(self.ids[f.t2]),
            alpha: Some(match axiom.phi {
                Phi::Txn(_) => Alpha::Txn(self.ids[read.txn]),
                Phi::EarlierRead(_) => Alpha::Read(read.op),
            }),
            cycle: cycle.map(|c| c.into_iter().map(|i| self.ids[i]).collect()),
        }
    }

    /// Explains a cycle: the first forced edge on it, or a plain so ∪ wr cycle.
    fn cycle_violation(
        &self,
        level: &IsolationLevel,
        cycle: Vec<usize>,
        provenance: &BTreeMap<(usize, usize), Forced>,
    ) -> Violation {
        let len = cycle.len();
        let forced = (0..len).find_map(|i| provenance.get(&(cycle[i], cycle[(i + 1) % len])));
        match forced {
            Some(f) => self.violation_for(level, f, Some(cycle)),
            None => Violation {
                axiom: "so ∪ wr acyclicity".into(),
                key: None,
                t1: None,
                t2: None,
                alpha: None,
                cycle: Some(cycle.into_iter().map(|i| self.ids[i]).collect()),
            },
        }
    }

    fn base_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = self.so_edges.clone();
        edges.extend(self.wr.pairs());
        edges
    }

    fn co_free(&self, level: &IsolationLevel) -> Verdict {
        let forced = self
            .forced(level, None, None)
            .expect("co-free levels evaluate without a commit order");
        let mut succ = vec![Vec::new(); self.n()];
        for (a, b) in self.base_edges() {
            succ[a].push(b);
        }
        let mut provenance = BTreeMap::new();
        for f in &forced {
            if provenance.insert((f.t2, f.t1), *f).is_none() {
                succ[f.t2].push(f.t1);
            }
        }
        match find_cycle(&succ) {
            Some(cycle) => Verdict::fail(self.cycle_violation(level, cycle, &provenance)),
            None => {
                let order = topo_order(&succ).expect("acyclic graph has a topological order");
                Verdict::ok(CommitOrder(order.into_iter().map(|i| self.ids[i]).collect()))
            }
        }
    }

    fn co_free_acyclic(&self, level: &IsolationLevel) -> bool {
        let Ok(forced) = self.forced(level, None, None) else {
            return false;
        };
        let mut succ = vec![Vec::new(); self.n()];
        for (a, b) in self.base_edges() {
            succ[a].push(b);
        }
        for f in forced {
            succ[f.t2].push(f.t1);
        }
        find_cycle(&succ).is_none()
    }

    fn order_indices(&self, co: &CommitOrder) -> Result<Vec<usize>, IsolationError> {
        if co.len() != self.n() {
            return Err(IsolationError::CoverageMismatch(format!(
                "{} transactions in the order, {} in the history",
                co.len(),
                self.n()
            )));
        }
        let mut seen = Bits::new(self.n());
        let mut out = Vec::with_capacity(co.len());
        for t in co.iter() {
            let Some(&i) = self.index.get(t) else {
                return Err(IsolationError::CoverageMismatch(format!("{t} is not in the history")));
            };
            if seen.contains(i) {
                return Err(IsolationError::CoverageMismatch(format!("{t} appears twice")));
            }
            seen.insert(i);
            out.push(i);
        }
        Ok(out)
    }

    /// First axiom instance that `order` (over the transactions in `mask`)
    /// breaks, if any.
    fn order_breaks(
        &self,
        level: &IsolationLevel,
        order: &[usize],
        mask: Option<&Bits>,
    ) -> Result<Option<Forced>, IsolationError> {
        let mut pos = vec![usize::MAX; self.n()];
        for (p, i) in order.iter().enumerate() {
            pos[*i] = p;
        }
        let co = BitRel::from_sequence(self.n(), order);
        let forced = self.forced(level, Some(&co), mask)?;
        Ok(forced.into_iter().find(|f| pos[f.t2] > pos[f.t1]))
    }

    fn with_order(&self, level: &IsolationLevel, co: &CommitOrder) -> Result<bool, IsolationError> {
        let order = self.order_indices(co)?;
        let mut pos = vec![0; self.n()];
        for (p, i) in order.iter().enumerate() {
            pos[*i] = p;
        }
        if self.so.pairs().chain(self.wr.pairs()).any(|(a, b)| pos[a] >= pos[b]) {
            return Ok(false);
        }
        Ok(self.order_breaks(level, &order, None)?.is_none())
    }

    fn co_dependent(&self, level: &IsolationLevel) -> Verdict {
        let n = self.n();
        let mut known = BitRel::empty(n);
        let mut edges = self.base_edges();
        for (a, b) in &edges {
            known.insert(*a, *b);
        }
        let mut provenance: BTreeMap<(usize, usize), Forced> = BTreeMap::new();
        let closure = loop {
            let closure = known.plus();
            if closure.has_self_loop() {
                let mut succ = vec![Vec::new(); n];
                for (a, b) in &edges {
                    succ[*a].push(*b);
                }
                let cycle = find_cycle(&succ).expect("closure has a self loop");
                return Verdict::fail(self.cycle_violation(level, cycle, &provenance));
            }
            let forced = self
                .forced(level, Some(&closure), None)
                .expect("commit order supplied");
            let mut changed = false;
            for f in forced {
                if !closure.contains(f.t2, f.t1) && !known.contains(f.t2, f.t1) {
                    known.insert(f.t2, f.t1);
                    edges.push((f.t2, f.t1));
                    provenance.insert((f.t2, f.t1), f);
                    changed = true;
                }
            }
            if !changed {
                break closure;
            }
        };

        let mut search = Search {
            view: self,
            level,
            preds: closure.transpose().successors_bits(),
            order: Vec::with_capacity(n),
            placed: Bits::new(n),
            failed: HashSet::new(),
            memo: level.last_writer_summarizes(),
            deepest: None,
        };
        if search.run() {
            let order = search.order.iter().map(|i| self.ids[*i]).collect();
            Verdict::ok(CommitOrder(order))
        } else {
            let violation = match search.deepest {
                Some((_, f)) => self.violation_for(level, &f, None),
                None => Violation {
                    axiom: level.name.clone(),
                    key: None,
                    t1: None,
                    t2: None,
                    alpha: None,
                    cycle: None,
                },
            };
            Verdict::fail(violation)
        }
    }
}

impl BitRel {
    fn successors_bits(&self) -> Vec<Bits> {
        self.range().map(|a| self.row(a).clone()).collect()
    }
}

/// Backtracking over linear extensions of the saturated partial order,
/// pruning prefixes that already break an axiom.
struct Search<'v, 'h> {
    view: &'v View<'h>,
    level: &'v IsolationLevel,
    preds: Vec<Bits>,
    order: Vec<usize>,
    placed: Bits,
    failed: HashSet<(Bits, Vec<Option<usize>>)>,
    memo: bool,
    deepest: Option<(usize, Forced)>,
}

impl Search<'_, '_> {
    fn last_writers(&self) -> Vec<Option<usize>> {
        self.view
            .writers
            .values()
            .map(|ws| self.order.iter().rev().find(|i| ws.contains(**i)).copied())
            .collect()
    }

    fn run(&mut self) -> bool {
        let n = self.view.n();
        if self.order.len() == n {
            return true;
        }
        let signature = self
            .memo
            .then(|| (self.placed.clone(), self.last_writers()));
        if let Some(sig) = &signature {
            if self.failed.contains(sig) {
                return false;
            }
        }
        for t in 0..n {
            if self.placed.contains(t) || !self.preds[t].is_subset(&self.placed) {
                continue;
            }
            self.placed.insert(t);
            self.order.push(t);
            let broken = self
                .view
                .order_breaks(self.level, &self.order, Some(&self.placed))
                .expect("commit order supplied");
            match broken {
                None => {
                    if self.run() {
                        return true;
                    }
                }
                Some(f) => {
                    if self.deepest.is_none_or(|(d, _)| d < self.order.len()) {
                        self.deepest = Some((self.order.len(), f));
                    }
                }
            }
            self.order.pop();
            self.placed.remove(t);
        }
        if let Some(sig) = signature {
            self.failed.insert(sig);
        }
        false
    }
}

/// Decides whether some commit order extending so ∪ wr validates `level`.
pub fn satisfies(h: &History, level: &IsolationLevel) -> Verdict {
    let view = View::new(h);
    if level.co_dependent() {
        view.co_dependent(level)
    } else {
        view.co_free(level)
    }
}

/// Whether `co` extends so ∪ wr and validates every axiom of `level`.
pub fn satisfies_with_order(
    h: &History,
    co: &CommitOrder,
    level: &IsolationLevel,
) -> Result<bool, IsolationError> {
    View::new(h).with_order(level, co)
}

/// All must-precede pairs `(t2, t1)` forced by the axioms of `level`.
pub fn derived_edges(
    h: &History,
    level: &IsolationLevel,
    co: Option<&CommitOrder>,
) -> Result<BTreeSet<(TxnId, TxnId)>, IsolationError> {
    let view = View::new(h);
    let co_rel = match co {
        Some(co) => Some(BitRel::from_sequence(view.n(), &view.order_indices(co)?)),
        None => None,
    };
    let forced = view.forced(level, co_rel.as_ref(), None)?;
    Ok(forced
        .into_iter()
        .map(|f| (view.ids[f.t2], view.ids[f.t1]))
        .collect())
}

/// Committed transactions `reader` may read `key` from so that the
/// extended history still satisfies `level`, ordered by transaction id.
///
/// Levels that depend on the commit order are checked against
/// `exec_order`, the order in which transactions were executed; the reader
/// is appended to it when missing.
pub fn valid_read_sources(
    h: &History,
    reader: TxnId,
    key: &Key,
    level: &IsolationLevel,
    exec_order: &CommitOrder,
) -> Vec<(TxnId, Value)> {
    let mut co = exec_order.clone();
    if !co.0.contains(&reader) {
        co.0.push(reader);
    }
    let mut out = Vec::new();
    for t in h.txn_ids() {
        if t == reader || !h.is_committed(t) {
            continue;
        }
        let Some(value) = h.final_write(t, key) else {
            continue;
        };
        let mut extended = h.clone();
        if extended
            .append_read(reader, key.clone(), value.clone(), t)
            .is_err()
        {
            continue;
        }
        let view = View::new(&extended);
        let valid = if level.co_dependent() {
            view.with_order(level, &co).unwrap_or(false)
        } else {
            view.co_free_acyclic(level)
        };
        if valid {
            out.push((t, value.clone()));
        }
    }
    out
}
