//! Binary relations over at most 64 nodes, stored as one bit row per node.

use std::fmt;

pub const MAX_NODES: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rel {
    rows: Vec<u64>,
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl Rel {
    pub fn new(n: usize) -> Rel {
        assert!(n <= MAX_NODES, "relations are limited to {MAX_NODES} nodes");
        Rel { rows: vec![0; n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Rel {
        let mut r = Rel::new(n);
        for (a, b) in pairs {
            r.add(a, b);
        }
        r
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.rows[a] |= 1 << b;
    }

    pub fn has(&self, a: usize, b: usize) -> bool {
        self.rows[a] >> b & 1 == 1
    }

    pub fn row(&self, a: usize) -> u64 {
        self.rows[a]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Predecessors of `b` as a bit mask.
    pub fn col(&self, b: usize) -> u64 {
        let mut m = 0;
        for (a, r) in self.rows.iter().enumerate() {
            if r >> b & 1 == 1 {
                m |= 1 << a;
            }
        }
        m
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(a, &r)| bits(r).map(move |b| (a, b)))
    }

    pub fn union(&self, o: &Rel) -> Rel {
        Rel { rows: self.rows.iter().zip(&o.rows).map(|(a, b)| a | b).collect() }
    }

    pub fn union_with(&mut self, o: &Rel) {
        for (a, b) in self.rows.iter_mut().zip(&o.rows) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, o: &Rel) -> bool {
        self.rows.iter().zip(&o.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn inverse(&self) -> Rel {
        let mut r = Rel::new(self.n());
        for (a, b) in self.pairs() {
            r.add(b, a);
        }
        r
    }

    /// Relational composition `self ; o`.
    pub fn compose(&self, o: &Rel) -> Rel {
        let rows = self
            .rows
            .iter()
            .map(|&r| bits(r).fold(0, |acc, m| acc | o.rows[m]))
            .collect();
        Rel { rows }
    }

    /// Transitive closure.
    pub fn plus(&self) -> Rel {
        let mut rows = self.rows.clone();
        let n = rows.len();
        for k in 0..n {
            for i in 0..n {
                if rows[i] >> k & 1 == 1 {
                    rows[i] |= rows[k];
                }
            }
        }
        Rel { rows }
    }

    pub fn is_acyclic(&self) -> bool {
        let c = self.plus();
        (0..c.n()).all(|i| !c.has(i, i))
    }

    /// A topological order of the nodes, if acyclic.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|b| self.col(b).count_ones() as usize).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut out = Vec::with_capacity(n);
        while let Some(a) = ready.pop() {
            out.push(a);
            for b in bits(self.rows[a]).collect::<Vec<_>>().into_iter().rev() {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
        (out.len() == n).then_some(out)
    }
}

/// Indices of the set bits of `m`, ascending.
pub fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_and_cycles() {
        let r = Rel::from_pairs(3, [(0, 1), (1, 2)]);
        assert!(r.plus().has(0, 2));
        assert!(r.is_acyclic());
        assert_eq!(r.topo_order(), Some(vec![0, 1, 2]));
        let c = Rel::from_pairs(3, [(0, 1), (1, 2), (2, 1)]);
        assert!(!c.is_acyclic());
        assert_eq!(c.topo_order(), None);
    }

    #[test]
    fn compose_and_inverse() {
        let a = Rel::from_pairs(3, [(0, 1)]);
        let b = Rel::from_pairs(3, [(1, 2)]);
        assert_eq!(a.compose(&b).pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(a.inverse().pairs().collect::<Vec<_>>(), vec![(1, 0)]);
    }
}
