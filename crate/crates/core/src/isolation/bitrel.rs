//! Dense binary relations over `0..n` stored as bit rows.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
}

impl Bits {
    pub fn new(n: usize) -> Self {
        Bits {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut b = Bits::new(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn union_with(&mut self, other: &Bits) -> bool {
        let mut changed = false;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            let next = *a | *b;
            changed |= next != *a;
            *a = next;
        }
        changed
    }

    pub fn intersect_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn is_subset(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

/// A relation `R ⊆ [0,n) × [0,n)`; row `a` holds every `b` with `(a,b) ∈ R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRel {
    n: usize,
    rows: Vec<Bits>,
}

impl BitRel {
    pub fn empty(n: usize) -> Self {
        BitRel {
            n,
            rows: vec![Bits::new(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = BitRel::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a].insert(b);
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a].contains(b)
    }

    pub fn row(&self, a: usize) -> &Bits {
        &self.rows[a]
    }

    pub fn union(mut self, other: &BitRel) -> BitRel {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.union_with(b);
        }
        self
    }

    /// `self ∘ other`: pairs `(a,c)` with `(a,b) ∈ self` and `(b,c) ∈ other`.
    pub fn compose(&self, other: &BitRel) -> BitRel {
        let mut out = BitRel::empty(self.n);
        for a in 0..self.n {
            for b in self.rows[a].iter() {
                out.rows[a].union_with(&other.rows[b]);
            }
        }
        out
    }

    /// Transitive closure (Warshall over bit rows).
    pub fn plus(&self) -> BitRel {
        let mut out = self.clone();
        for k in 0..self.n {
            let via = out.rows[k].clone();
            for a in 0..self.n {
                if out.rows[a].contains(k) {
                    out.rows[a].union_with(&via);
                }
            }
        }
        out
    }

    pub fn star(&self) -> BitRel {
        self.plus().union(&BitRel::identity(self.n))
    }

    pub fn transpose(&self) -> BitRel {
        let mut out = BitRel::empty(self.n);
        for a in 0..self.n {
            for b in self.rows[a].iter() {
                out.insert(b, a);
            }
        }
        out
    }

    /// Keeps only pairs whose endpoints are both in `mask`.
    pub fn restrict(mut self, mask: &Bits) -> BitRel {
        for a in 0..self.n {
            if mask.contains(a) {
                self.rows[a].intersect_with(mask);
            } else {
                self.rows[a] = Bits::new(self.n);
            }
        }
        self
    }

    pub fn has_self_loop(&self) -> bool {
        (0..self.n).any(|i| self.contains(i, i))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| self.rows[a].iter().map(move |b| (a, b)))
    }

    /// Strict total order relation from a sequence of distinct indices.
    pub fn from_sequence(n: usize, order: &[usize]) -> BitRel {
        let mut out = BitRel::empty(n);
        for (i, a) in order.iter().enumerate() {
            for b in &order[i + 1..] {
                out.insert(*a, *b);
            }
        }
        out
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|a| self.rows[a].iter().collect()).collect()
    }

    pub fn range(&self) -> Range<usize> {
        0..self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_and_compose() {
        let mut r = BitRel::empty(70);
        r.insert(0, 1);
        r.insert(1, 65);
        r.insert(65, 69);
        let p = r.plus();
        assert!(p.contains(0, 69));
        assert!(!p.contains(69, 0));
        assert!(!p.has_self_loop());
        let c = r.compose(&r);
        assert!(c.contains(0, 65) && c.contains(1, 69) && !c.contains(0, 1));
        assert!(r.transpose().contains(69, 65));
    }

    #[test]
    fn bits_iterate_in_order() {
        let mut b = Bits::new(130);
        for i in [129, 3, 64] {
            b.insert(i);
        }
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![3, 64, 129]);
        b.remove(64);
        assert!(!b.contains(64));
    }

    #[test]
    fn restrict_drops_outside_pairs() {
        let r = BitRel::from_sequence(3, &[0, 1, 2]);
        let mut mask = Bits::new(3);
        mask.insert(0);
        mask.insert(2);
        let r = r.restrict(&mask);
        assert_eq!(r.pairs().collect::<Vec<_>>(), vec![(0, 2)]);
    }
}
