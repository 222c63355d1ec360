use super::Trace;
use crate::graph::{for_each_simple_cycle, CycleOverflow};
use crate::rel::Rel;
use std::fmt;
use std::ops::ControlFlow;

pub const PO: u8 = 1;
pub const RF: u8 = 2;
pub const WS: u8 = 4;
pub const CF: u8 = 8;

fn label_name(l: u8) -> String {
    let mut parts = Vec::new();
    for (bit, name) in [(PO, "po"), (RF, "rf"), (WS, "ws"), (CF, "cf")] {
        if l & bit != 0 {
            parts.push(name);
        }
    }
    parts.join("|")
}

/// Dependency graph of a trace; every ordered pair carries the set of relations
/// (as `PO | RF | WS | CF` bits) that relate it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbGraph {
    n: usize,
    labels: Vec<u8>,
}

impl HbGraph {
    pub fn of(t: &Trace) -> HbGraph {
        let n = t.n();
        let mut g = HbGraph { n, labels: vec![0; n * n] };
        for &(a, b) in &t.po {
            g.labels[a * n + b] |= PO;
        }
        for d in &t.rf {
            g.labels[d.from * n + d.to] |= RF;
        }
        for d in &t.ws {
            g.labels[d.from * n + d.to] |= WS;
        }
        for d in t.cf() {
            g.labels[d.from * n + d.to] |= CF;
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self, a: usize, b: usize) -> u8 {
        self.labels[a * self.n + b]
    }

    pub fn adjacency(&self) -> Vec<u64> {
        (0..self.n)
            .map(|a| (0..self.n).filter(|&b| self.label(a, b) != 0).fold(0u64, |m, b| m | 1 << b))
            .collect()
    }

    pub fn rel(&self) -> Rel {
        let mut r = Rel::new(self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                if self.label(a, b) != 0 {
                    r.add(a, b);
                }
            }
        }
        r
    }

    pub fn is_acyclic(&self) -> bool {
        self.rel().is_acyclic()
    }

    /// Whether `b` is reachable from `a` by a non-empty path.
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.rel().plus().has(a, b)
    }

    pub fn for_each_cycle(
        &self,
        cap: usize,
        mut f: impl FnMut(CyclePattern) -> ControlFlow<()>,
    ) -> Result<(), CycleOverflow> {
        for_each_simple_cycle(&self.adjacency(), cap, |nodes| f(CyclePattern::new(self, nodes)))
    }

    pub fn simple_cycles(&self, cap: usize) -> Result<Vec<CyclePattern>, CycleOverflow> {
        let mut out = Vec::new();
        self.for_each_cycle(cap, |c| {
            out.push(c);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }
}

/// A simple cycle of the dependency graph. `labels[i]` relates `nodes[i]` to the next node
/// (wrapping around). Several relations may connect the same pair, so the flags quantify
/// over the choice of one relation per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclePattern {
    pub nodes: Vec<usize>,
    pub labels: Vec<u8>,
    /// Every choice of relations contains two successive cf steps.
    pub has_two_successive_cf: bool,
    /// Some choice of relations contains a ws step followed by a cf step.
    pub has_ws_then_cf: bool,
}

impl CyclePattern {
    fn new(g: &HbGraph, nodes: &[usize]) -> CyclePattern {
        let k = nodes.len();
        let labels: Vec<u8> = (0..k).map(|i| g.label(nodes[i], nodes[(i + 1) % k])).collect();
        let next = |i: usize| labels[(i + 1) % k];
        let has_two_successive_cf = (0..k).any(|i| labels[i] == CF && next(i) == CF);
        let has_ws_then_cf = (0..k).any(|i| labels[i] & WS != 0 && next(i) & CF != 0);
        CyclePattern { nodes: nodes.to_vec(), labels, has_two_successive_cf, has_ws_then_cf }
    }

    /// Every choice of relations contains a cf step preceded by a ws or cf step.
    pub fn has_ws_or_cf_then_cf(&self) -> bool {
        let k = self.labels.len();
        (0..k).any(|i| self.labels[i] & (PO | RF) == 0 && self.labels[(i + 1) % k] == CF)
    }

    pub fn display<'a>(&'a self, t: &'a Trace) -> impl fmt::Display + 'a {
        CycleDisplay { c: self, t }
    }
}

struct CycleDisplay<'a> {
    c: &'a CyclePattern,
    t: &'a Trace,
}

impl fmt::Display for CycleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, l) in self.c.nodes.iter().zip(&self.c.labels) {
            write!(f, "{} -{}-> ", self.t.tid(*n), label_name(*l))?;
        }
        write!(f, "{}", self.t.tid(self.c.nodes[0]))
    }
}
