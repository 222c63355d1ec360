//! Elementary circuit enumeration (Johnson, 1975) over bit-row adjacency.

use crate::rel::bits;
use std::ops::ControlFlow;

pub const DEFAULT_CYCLE_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("simple-cycle budget of {0} exceeded")]
pub struct CycleOverflow(pub usize);

struct Johnson<'a, F> {
    adj: &'a [u64],
    allowed: u64,
    start: usize,
    blocked: u64,
    b: Vec<u64>,
    stack: Vec<usize>,
    emitted: usize,
    cap: usize,
    f: F,
    stop: Option<Result<(), CycleOverflow>>,
}

impl<F: FnMut(&[usize]) -> ControlFlow<()>> Johnson<'_, F> {
    fn unblock(&mut self, u: usize) {
        self.blocked &= !(1 << u);
        let bu = std::mem::take(&mut self.b[u]);
        for w in bits(bu) {
            if self.blocked >> w & 1 == 1 {
                self.unblock(w);
            }
        }
    }

    fn circuit(&mut self, v: usize) -> bool {
        let mut found = false;
        self.stack.push(v);
        self.blocked |= 1 << v;
        for w in bits(self.adj[v] & self.allowed) {
            if self.stop.is_some() {
                break;
            }
            if w == self.start {
                found = true;
                if self.emitted == self.cap {
                    self.stop = Some(Err(CycleOverflow(self.cap)));
                    break;
                }
                self.emitted += 1;
                if (self.f)(&self.stack).is_break() {
                    self.stop = Some(Ok(()));
                }
            } else if self.blocked >> w & 1 == 0 && self.circuit(w) {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for w in bits(self.adj[v] & self.allowed) {
                self.b[w] |= 1 << v;
            }
        }
        self.stack.pop();
        found
    }
}

/// Calls `f` once per simple cycle, given as its node sequence starting at the smallest
/// node. Stops early when `f` breaks. Fails once more than `cap` cycles are produced.
pub fn for_each_simple_cycle(
    adj: &[u64],
    cap: usize,
    f: impl FnMut(&[usize]) -> ControlFlow<()>,
) -> Result<(), CycleOverflow> {
    let n = adj.len();
    let mut j = Johnson {
        adj,
        allowed: 0,
        start: 0,
        blocked: 0,
        b: vec![0; n],
        stack: Vec::new(),
        emitted: 0,
        cap,
        f,
        stop: None,
    };
    for s in 0..n {
        j.start = s;
        j.allowed = if s == 63 { 1 << 63 } else { !((1u64 << s) - 1) };
        j.blocked = 0;
        j.b.iter_mut().for_each(|x| *x = 0);
        j.circuit(s);
        if let Some(r) = j.stop.take() {
            return r;
        }
    }
    Ok(())
}

pub fn simple_cycles(adj: &[u64], cap: usize) -> Result<Vec<Vec<usize>>, CycleOverflow> {
    let mut out = Vec::new();
    for_each_simple_cycle(adj, cap, |c| {
        out.push(c.to_vec());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
        let mut a = vec![0u64; n];
        for &(x, y) in edges {
            a[x] |= 1 << y;
        }
        a
    }

    #[test]
    fn complete_graph_cycle_count() {
        // K4 with all ordered pairs has 20 elementary circuits
        let mut e = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    e.push((a, b));
                }
            }
        }
        let mut cs = simple_cycles(&adj(4, &e), 1000).unwrap();
        assert_eq!(cs.len(), 20);
        cs.sort();
        cs.dedup();
        assert_eq!(cs.len(), 20);
    }

    #[test]
    fn self_loop_and_acyclic() {
        assert_eq!(simple_cycles(&adj(2, &[(0, 0), (0, 1)]), 10).unwrap(), vec![vec![0]]);
        assert!(simple_cycles(&adj(3, &[(0, 1), (1, 2)]), 10).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let e: Vec<_> = (0..5).flat_map(|a| (0..5).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        assert_eq!(simple_cycles(&adj(5, &e), 3), Err(CycleOverflow(3)));
    }
}
