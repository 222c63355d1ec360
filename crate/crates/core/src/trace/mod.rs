//! Traces: transactions with their read/write events, program order, read-from and
//! store order, plus derived conflict and happens-before relations.

mod cycles;
mod json;
mod split;

pub use cycles::{CyclePattern, HbGraph, CF, PO, RF, WS};
pub use json::TraceError;
pub use split::{half_tid, merge_split_trace, split_trace, Half, Origin};

use crate::lang::Value;
use crate::rel::Rel;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub var: String,
    pub value: Value,
}

impl Event {
    pub fn read(var: &str, value: Value) -> Event {
        Event { kind: EventKind::Read, var: var.to_string(), value }
    }

    pub fn write(var: &str, value: Value) -> Event {
        Event { kind: EventKind::Write, var: var.to_string(), value }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TxnRecord {
    pub tid: String,
    pub process: String,
    pub events: Vec<Event>,
    /// Set on transactions of a split trace.
    pub origin: Option<Origin>,
}

/// A dependency between two transactions on one variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dep {
    pub from: usize,
    pub to: usize,
    pub var: String,
}

impl Dep {
    pub fn new(from: usize, to: usize, var: &str) -> Dep {
        Dep { from, to, var: var.to_string() }
    }
}

/// Transaction 0 is the initializing transaction. `po` holds the full (transitive)
/// program order including the init edges; `ws` holds, per variable, every ordered
/// pair of its strict total store order.
///
/// Equality, hashing and ordering only consider transaction ids, `rf` and `ws`.
#[derive(Clone, Debug)]
pub struct Trace {
    pub txns: Vec<TxnRecord>,
    pub po: Vec<(usize, usize)>,
    pub rf: Vec<Dep>,
    pub ws: Vec<Dep>,
}

impl Trace {
    /// A trace holding only the init transaction, which writes `value` to every variable.
    pub fn with_init(init_tid: &str, vars: &[String], value: Value) -> Trace {
        let events = vars.iter().map(|v| Event::write(v, value)).collect();
        Trace {
            txns: vec![TxnRecord { tid: init_tid.to_string(), process: init_tid.to_string(), events, origin: None }],
            po: Vec::new(),
            rf: Vec::new(),
            ws: Vec::new(),
        }
    }

    pub fn init_tid(&self) -> &str {
        &self.txns[0].tid
    }

    pub fn n(&self) -> usize {
        self.txns.len()
    }

    pub fn tid(&self, i: usize) -> &str {
        &self.txns[i].tid
    }

    pub fn index_of(&self, tid: &str) -> Option<usize> {
        self.txns.iter().position(|t| t.tid == tid)
    }

    /// Shared variables, in the order the init transaction writes them.
    pub fn vars(&self) -> Vec<&str> {
        self.txns[0].events.iter().map(|e| e.var.as_str()).collect()
    }

    pub fn reads(&self, i: usize) -> impl Iterator<Item = &Event> {
        self.txns[i].events.iter().filter(|e| e.kind == EventKind::Read)
    }

    pub fn writes(&self, i: usize) -> impl Iterator<Item = &Event> {
        self.txns[i].events.iter().filter(|e| e.kind == EventKind::Write)
    }

    pub fn has_reads(&self, i: usize) -> bool {
        self.reads(i).next().is_some()
    }

    pub fn has_writes(&self, i: usize) -> bool {
        self.writes(i).next().is_some()
    }

    pub fn writes_var(&self, i: usize, x: &str) -> bool {
        self.writes(i).any(|e| e.var == x)
    }

    pub fn reads_var(&self, i: usize, x: &str) -> bool {
        self.reads(i).any(|e| e.var == x)
    }

    /// Value of the last write to `x` in transaction `i`.
    pub fn written_value(&self, i: usize, x: &str) -> Option<Value> {
        self.writes(i).filter(|e| e.var == x).last().map(|e| e.value)
    }

    /// Appends a transaction and returns its index. Program order must be set separately.
    pub fn push(&mut self, tid: &str, process: &str, events: Vec<Event>) -> usize {
        self.txns.push(TxnRecord { tid: tid.to_string(), process: process.to_string(), events, origin: None });
        self.txns.len() - 1
    }

    /// Sets `po` to: init before everything, and transactions of one process in index order.
    pub fn po_from_processes(&mut self) {
        let n = self.n();
        let mut po = Vec::new();
        for b in 1..n {
            po.push((0, b));
        }
        for a in 1..n {
            for b in a + 1..n {
                if self.txns[a].process == self.txns[b].process {
                    po.push((a, b));
                }
            }
        }
        po.sort();
        self.po = po;
    }

    /// Sets the store order of `x` to the given sequence of writers.
    pub fn set_ws_chain(&mut self, x: &str, chain: &[usize]) {
        self.ws.retain(|d| d.var != x);
        for (i, &a) in chain.iter().enumerate() {
            for &b in &chain[i + 1..] {
                self.ws.push(Dep::new(a, b, x));
            }
        }
        self.ws.sort();
    }

    /// Writers of `x` in store order.
    pub fn ws_chain(&self, x: &str) -> Vec<usize> {
        let mut w: Vec<usize> = (0..self.n()).filter(|&i| self.writes_var(i, x)).collect();
        w.sort_by_key(|&i| self.ws.iter().filter(|d| d.var == x && d.to == i).count());
        w
    }

    /// Writer that transaction `i` reads `x` from.
    pub fn rf_source(&self, i: usize, x: &str) -> Option<usize> {
        self.rf.iter().find(|d| d.to == i && d.var == x).map(|d| d.from)
    }

    pub fn po_rel(&self) -> Rel {
        Rel::from_pairs(self.n(), self.po.iter().copied())
    }

    pub fn rf_rel(&self) -> Rel {
        Rel::from_pairs(self.n(), self.rf.iter().map(|d| (d.from, d.to)))
    }

    pub fn ws_rel(&self) -> Rel {
        Rel::from_pairs(self.n(), self.ws.iter().map(|d| (d.from, d.to)))
    }

    /// Conflict order `rf⁻¹ ; ws`, per variable, excluding self pairs.
    pub fn cf(&self) -> Vec<Dep> {
        let mut out = Vec::new();
        for r in &self.rf {
            for w in &self.ws {
                if w.var == r.var && w.from == r.from && w.to != r.to {
                    out.push(Dep::new(r.to, w.to, &r.var));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn cf_rel(&self) -> Rel {
        Rel::from_pairs(self.n(), self.cf().into_iter().map(|d| (d.from, d.to)))
    }

    pub fn hb_graph(&self) -> HbGraph {
        HbGraph::of(self)
    }

    /// `(po ∪ rf ∪ ws ∪ cf)+`
    pub fn hb(&self) -> Rel {
        self.hb_graph().rel().plus()
    }

    fn key(&self) -> (Vec<&str>, &[Dep], &[Dep]) {
        (self.txns.iter().map(|t| t.tid.as_str()).collect(), &self.rf, &self.ws)
    }
}

impl PartialEq for Trace {
    fn eq(&self, o: &Self) -> bool {
        self.key() == o.key()
    }
}

impl Eq for Trace {}

impl Hash for Trace {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.key().hash(h)
    }
}

impl PartialOrd for Trace {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Trace {
    fn cmp(&self, o: &Self) -> Ordering {
        let (a, b) = (self.key(), o.key());
        a.0.len().cmp(&b.0.len()).then_with(|| a.cmp(&b))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.txns.iter().skip(1) {
            let ev: Vec<String> = t
                .events
                .iter()
                .map(|e| match e.kind {
                    EventKind::Read => format!("rd({},{})", e.var, e.value),
                    EventKind::Write => format!("wr({},{})", e.var, e.value),
                })
                .collect();
            writeln!(f, "{} [{}]: {}", t.tid, t.process, ev.join(" "))?;
        }
        let show = |f: &mut fmt::Formatter<'_>, name: &str, ds: &[Dep]| -> fmt::Result {
            let s: Vec<String> = ds.iter().map(|d| format!("{}->{}({})", self.tid(d.from), self.tid(d.to), d.var)).collect();
            writeln!(f, "{name}: {}", s.join(" "))
        };
        show(f, "rf", &self.rf)?;
        show(f, "ws", &self.ws)?;
        show(f, "cf", &self.cf())
    }
}

#[cfg(test)]
pub(crate) mod tests;
