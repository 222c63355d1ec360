//! Commutativity dependency graphs of split programs and the cycle conditions under
//! which they prove robustness (CC vs PC and PC vs SI).
//!
//! `a` is not a right mover because of `b` (transactions of distinct processes) when swapping
//! `a; b` would change a dependency between them: `b` reading a variable `a` writes (MRF), both
//! writing one variable (MWW), or `b` writing a variable `a` reads (MRW). Swapping such a pair
//! changes the read-from source or the store order even when the values agree, so every
//! dependency of a trace maps to a graph edge. Pairs whose swap also preserves the end state
//! from every valuation over the program's domain are recorded separately.

use crate::exec::{step, Step, StoreState};
use crate::graph::for_each_simple_cycle;
use crate::lang::{compile, Compiled, NormalizeError};
use crate::transform::{Half, SplitProgram};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    MRF,
    MWW,
    MRW,
    PO,
    STO,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [EdgeKind::MRF, EdgeKind::MWW, EdgeKind::MRW, EdgeKind::PO, EdgeKind::STO];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::MRF => "MRF",
            EdgeKind::MWW => "MWW",
            EdgeKind::MRW => "MRW",
            EdgeKind::PO => "po",
            EdgeKind::STO => "STO",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type Edge = (usize, usize, EdgeKind);

/// Vertices are the transactions of a split program. STO edges are undirected and stored
/// once, from the read half to the write half.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepGraph {
    pub name: String,
    pub nodes: Vec<String>,
    pub edges: BTreeSet<Edge>,
    /// Non-mover pairs whose swap preserves the end state from every valuation over the
    /// domain (for instance two writes of one constant).
    pub value_commuting: BTreeSet<(usize, usize)>,
    /// Some pair had more valuations than the budget; it is not listed in `value_commuting`.
    pub overflow: bool,
}

/// Kinds of dependency `a` may have towards `b`, judged by the variables they access.
fn overlap_kinds(c: &Compiled, a: usize, b: usize) -> Vec<EdgeKind> {
    let (ta, tb) = (&c.txns[a], &c.txns[b]);
    let mut k = Vec::new();
    if ta.writes.iter().any(|(x, _)| tb.reads_var(*x)) {
        k.push(EdgeKind::MRF);
    }
    if ta.writes.iter().any(|(x, _)| tb.writes_var(*x)) {
        k.push(EdgeKind::MWW);
    }
    if ta.reads.iter().any(|&(_, x)| tb.writes_var(x)) {
        k.push(EdgeKind::MRW);
    }
    k
}

fn commits(c: &Compiled, t: usize, s: &mut StoreState) -> bool {
    matches!(step(c, t, s), Step::Commit { .. })
}

/// Whether `a; b` and `b; a` agree from every valuation of the shared variables and both
/// processes' registers over the domain: when `a; b` commits, so does `b; a`, with the same
/// end state. `None` when the number of valuations exceeds `budget`.
pub fn state_commutes(c: &Compiled, a: usize, b: usize, budget: usize) -> Option<bool> {
    let (p, q) = (c.txns[a].proc_idx, c.txns[b].proc_idx);
    let dom = &c.domain;
    let slots = c.vars.len() + c.procs[p].regs.len() + c.procs[q].regs.len();
    let total = (dom.len() as u128).checked_pow(slots as u32)?;
    if total > budget as u128 {
        return None;
    }
    let mut idx = vec![0usize; slots];
    loop {
        let mut s = StoreState::initial(c);
        let mut it = idx.iter().map(|&i| dom[i]);
        for v in s.shared.iter_mut() {
            *v = it.next().unwrap();
        }
        for pr in [p, q] {
            for v in s.regs[pr].iter_mut() {
                *v = it.next().unwrap();
            }
        }
        let mut ab = s.clone();
        if commits(c, a, &mut ab) && commits(c, b, &mut ab) {
            let mut ba = s;
            if !(commits(c, b, &mut ba) && commits(c, a, &mut ba)) || ba != ab {
                return Some(false);
            }
        }
        let mut i = 0;
        loop {
            if i == slots {
                return Some(true);
            }
            idx[i] += 1;
            if idx[i] < dom.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Non-mover edges `(a, b, kind)` between transactions of distinct processes.
pub fn non_mover_relations(c: &Compiled) -> BTreeSet<Edge> {
    let mut edges = BTreeSet::new();
    for a in 0..c.txns.len() {
        for b in 0..c.txns.len() {
            if c.txns[a].proc_idx != c.txns[b].proc_idx {
                edges.extend(overlap_kinds(c, a, b).into_iter().map(|k| (a, b, k)));
            }
        }
    }
    edges
}

/// Non-mover edges, program order between consecutive transactions of a process, and STO
/// between the halves of each original transaction. `budget` bounds the valuations tried per
/// pair by the end-state check.
pub fn build_graph(sp: &SplitProgram, budget: usize) -> Result<DepGraph, NormalizeError> {
    let c = compile(&sp.program)?;
    let mut edges = non_mover_relations(&c);
    let mut value_commuting = BTreeSet::new();
    let mut overflow = false;
    let pairs: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
    for (a, b) in pairs {
        match state_commutes(&c, a, b, budget) {
            Some(true) => {
                value_commuting.insert((a, b));
            }
            Some(false) => {}
            None => overflow = true,
        }
    }
    for p in &c.procs {
        for w in p.txns.windows(2) {
            edges.insert((w[0], w[1], EdgeKind::PO));
        }
    }
    for (r, o) in &sp.origin {
        if o.half != Half::Read {
            continue;
        }
        let w = sp.origin.iter().find(|(_, ow)| ow.tid == o.tid && ow.half == Half::Write);
        if let (Some(ri), Some((wt, _))) = (c.txn_index(r), w) {
            edges.insert((ri, c.txn_index(wt).unwrap(), EdgeKind::STO));
        }
    }
    Ok(DepGraph {
        name: sp.program.name.clone().unwrap_or_else(|| "program".to_string()),
        nodes: c.txns.iter().map(|t| t.tid.clone()).collect(),
        edges,
        value_commuting,
        overflow,
    })
}

impl DepGraph {
    pub fn node(&self, tid: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == tid)
    }

    /// Edge kinds from `a` to `b`, STO counted in both directions, as a bit set.
    fn labels(&self) -> Vec<Vec<u8>> {
        let n = self.nodes.len();
        let mut l = vec![vec![0u8; n]; n];
        for &(a, b, k) in &self.edges {
            l[a][b] |= k.bit();
            if k == EdgeKind::STO {
                l[b][a] |= k.bit();
            }
        }
        l
    }

    /// `(src, dst, kind)` with tids, sorted.
    pub fn named_edges(&self) -> Vec<(String, String, EdgeKind)> {
        let mut v: Vec<_> =
            self.edges.iter().map(|&(a, b, k)| (self.nodes[a].clone(), self.nodes[b].clone(), k)).collect();
        v.sort();
        v
    }

    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph \"{}\" {{\n", self.name);
        for n in &self.nodes {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for &(a, b, k) in &self.edges {
            let style = match k {
                EdgeKind::STO => ", dir=none, style=dashed",
                EdgeKind::PO => ", style=dotted",
                _ if self.value_commuting.contains(&(a, b)) => ", color=gray",
                _ => "",
            };
            s.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}\"{}];\n", self.nodes[a], self.nodes[b], k, style));
        }
        s.push_str("}\n");
        s
    }

    /// Calls `f` with the node sequence and per-step label sets of each simple cycle.
    fn for_each_cycle(&self, cap: usize, mut f: impl FnMut(&[usize], &[u8]) -> bool) -> Result<(), usize> {
        let l = self.labels();
        let n = self.nodes.len();
        let adj: Vec<u64> =
            (0..n).map(|a| (0..n).filter(|&b| l[a][b] != 0).fold(0u64, |m, b| m | 1 << b)).collect();
        for_each_simple_cycle(&adj, cap, |cy| {
            let labs: Vec<u8> = (0..cy.len()).map(|i| l[cy[i]][cy[(i + 1) % cy.len()]]).collect();
            if f(cy, &labs) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .map_err(|e| e.0)
    }

    fn render(&self, nodes: &[usize], labels: &[EdgeKind]) -> String {
        let mut s = self.nodes[nodes[0]].clone();
        for (i, k) in labels.iter().enumerate() {
            s.push_str(&format!(" -{}-> {}", k, self.nodes[nodes[(i + 1) % nodes.len()]]));
        }
        s
    }
}

/// Result of a commutativity-graph proof attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proof {
    Robust,
    /// A cycle of the forbidden shape exists (rendered), or the cycle budget ran out.
    Inconclusive(String),
}

impl Proof {
    pub fn is_robust(&self) -> bool {
        *self == Proof::Robust
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proof::Robust => f.write_str("robust"),
            Proof::Inconclusive(w) => f.write_str(w),
        }
    }
}

fn has(l: u8, k: EdgeKind) -> bool {
    l & k.bit() != 0
}

fn first_of(l: u8, ks: &[EdgeKind]) -> Option<EdgeKind> {
    ks.iter().copied().find(|&k| has(l, k))
}

/// Labels `e[0..m]` of one rotation, `e[j-1]` being the step from `t_j` to `t_{j+1}`.
/// Matches: `e_m ∈ MRW`; for some `i < m`, steps before `i` in po ∪ MRF, step `i` in
/// MRW ∪ MWW, later steps in MRW ∪ MWW ∪ MRF ∪ po.
fn match_cc_pc(e: &[u8]) -> Option<Vec<EdgeKind>> {
    use EdgeKind::*;
    let m = e.len();
    if !has(e[m - 1], MRW) {
        return None;
    }
    for i in 1..m {
        let pre = (0..i - 1).map(|j| first_of(e[j], &[PO, MRF])).collect::<Option<Vec<_>>>();
        let mid = first_of(e[i - 1], &[MRW, MWW]);
        let post = (i..m - 1).map(|j| first_of(e[j], &[MRW, MWW, MRF, PO])).collect::<Option<Vec<_>>>();
        if let (Some(mut v), Some(k), Some(post)) = (pre, mid, post) {
            v.push(k);
            v.extend(post);
            v.push(MRW);
            return Some(v);
        }
    }
    None
}

/// Matches: `e_m ∈ MWW`, `e_1 ∈ STO`, `e_2 ∈ MRW`, and a label choice for the remaining
/// steps meeting the successor conditions around MRW and STO steps.
fn match_pc_si(e: &[u8]) -> Option<Vec<EdgeKind>> {
    use EdgeKind::*;
    let m = e.len();
    if m < 3 || !has(e[m - 1], MWW) || !has(e[0], STO) || !has(e[1], MRW) {
        return None;
    }
    // c[j] is the label of step j (1-based); index 0 unused
    let mut c = vec![None; m + 1];
    c[1] = Some(STO);
    c[2] = Some(MRW);
    c[m] = Some(MWW);
    fn ok(c: &[Option<EdgeKind>], m: usize, upto: usize) -> bool {
        let get = |j: usize| c[j].unwrap();
        let done = |j: usize| j <= upto || j == m;
        for j in 2..=m.saturating_sub(2) {
            if !(done(j) && done(j + 1)) {
                continue;
            }
            if get(j) == MRW && !matches!(get(j + 1), MRF | PO | MWW) {
                return false;
            }
            if get(j + 1) == MRW && !matches!(get(j), MRF | PO) {
                return false;
            }
        }
        for j in 3..=m.saturating_sub(3) {
            if !(done(j) && done(j + 1) && done(j + 2)) {
                continue;
            }
            if get(j + 1) == STO && get(j + 2) == MRW && get(j) != MWW {
                return false;
            }
        }
        true
    }
    fn go(e: &[u8], c: &mut Vec<Option<EdgeKind>>, m: usize, j: usize) -> bool {
        if j == m {
            return ok(c, m, m);
        }
        for k in EdgeKind::ALL {
            if has(e[j - 1], k) {
                c[j] = Some(k);
                if ok(c, m, j) && go(e, c, m, j + 1) {
                    return true;
                }
            }
        }
        c[j] = None;
        false
    }
    if !ok(&c, m, 2) || !go(e, &mut c, m, 3) {
        return None;
    }
    Some(c[1..].iter().map(|k| k.unwrap()).collect())
}

fn prove(g: &DepGraph, cap: usize, matcher: fn(&[u8]) -> Option<Vec<EdgeKind>>) -> Proof {
    let mut hit = None;
    let r = g.for_each_cycle(cap, |nodes, labs| {
        let m = nodes.len();
        for r in 0..m {
            let rot: Vec<u8> = (0..m).map(|j| labs[(r + j) % m]).collect();
            if let Some(ks) = matcher(&rot) {
                let ns: Vec<usize> = (0..m).map(|j| nodes[(r + j) % m]).collect();
                hit = Some(g.render(&ns, &ks));
                return true;
            }
        }
        false
    });
    match (hit, r) {
        (Some(w), _) => Proof::Inconclusive(w),
        (None, Err(cap)) => Proof::Inconclusive(format!("simple-cycle budget of {cap} exceeded")),
        (None, Ok(())) => Proof::Robust,
    }
}

/// Robust against CC relative to PC unless a simple cycle has the shape
/// `t_n -MRW-> t_1 (-po|MRF->)* t_i -MRW|MWW-> t_{i+1} (-MRW|MWW|MRF|po->)* t_n`.
pub fn prove_robust_cc_pc(g: &DepGraph, cycle_budget: usize) -> Proof {
    prove(g, cycle_budget, match_cc_pc)
}

/// Robust against PC relative to SI unless a simple cycle has the shape
/// `t_n -MWW-> t_1 -STO-> t_2 -MRW-> t_3 ... t_n` with the successor conditions.
pub fn prove_robust_pc_si(g: &DepGraph, cycle_budget: usize) -> Proof {
    prove(g, cycle_budget, match_pc_si)
}

#[cfg(test)]
mod tests;
