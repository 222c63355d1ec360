//! `traces.json` interchange format.

use super::{Dep, Event, EventKind, Origin, Trace, TxnRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("invalid trace JSON: {0}")]
    Json(String),
    #[error("unknown transaction `{0}`")]
    UnknownTid(String),
    #[error("edge ({0}, {1}) is ambiguous without a variable")]
    Ambiguous(String, String),
    #[error("transaction `{0}` carries no read/write half tag")]
    Untagged(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    transactions: Vec<TxnJson>,
    po: Vec<(String, String)>,
    rf: Vec<EdgeJson>,
    ws: Vec<EdgeJson>,
    init: String,
}

#[derive(Serialize, Deserialize)]
struct TxnJson {
    tid: String,
    process: String,
    events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Origin>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeJson {
    Triple(String, String, String),
    Pair(String, String),
}

impl Trace {
    /// Canonical pretty-printed JSON; `from_json(to_json(t))` reproduces `t` and re-serializing
    /// gives identical text.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("trace serialization cannot fail")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let name = |i: usize| self.tid(i).to_string();
        let j = TraceJson {
            transactions: self
                .txns
                .iter()
                .map(|t| TxnJson {
                    tid: t.tid.clone(),
                    process: t.process.clone(),
                    events: t.events.clone(),
                    origin: t.origin.clone(),
                })
                .collect(),
            po: self.po.iter().map(|&(a, b)| (name(a), name(b))).collect(),
            rf: self.rf.iter().map(|d| EdgeJson::Triple(name(d.from), name(d.to), d.var.clone())).collect(),
            ws: self.ws.iter().map(|d| EdgeJson::Triple(name(d.from), name(d.to), d.var.clone())).collect(),
            init: self.init_tid().to_string(),
        };
        serde_json::to_value(&j).expect("trace serialization cannot fail")
    }

    /// Parses and validates a trace. `rf`/`ws` entries may omit the variable when the
    /// two transactions share exactly one candidate variable.
    pub fn from_json(src: &str) -> Result<Trace, TraceError> {
        let j: TraceJson = serde_json::from_str(src).map_err(|e| TraceError::Json(e.to_string()))?;
        let mut txns: Vec<TxnRecord> = j
            .transactions
            .into_iter()
            .map(|t| TxnRecord { tid: t.tid, process: t.process, events: t.events, origin: t.origin })
            .collect();
        let init = txns.iter().position(|t| t.tid == j.init).ok_or(TraceError::UnknownTid(j.init.clone()))?;
        let it = txns.remove(init);
        txns.insert(0, it);
        let mut t = Trace { txns, po: Vec::new(), rf: Vec::new(), ws: Vec::new() };
        let idx = |t: &Trace, s: &str| t.index_of(s).ok_or_else(|| TraceError::UnknownTid(s.to_string()));
        let mut po = BTreeSet::new();
        for b in 1..t.n() {
            po.insert((0, b));
        }
        for (a, b) in &j.po {
            po.insert((idx(&t, a)?, idx(&t, b)?));
        }
        t.po = po.into_iter().collect();
        let po_rel = t.po_rel().plus();
        t.po = po_rel.pairs().collect();
        for (edges, is_rf) in [(&j.rf, true), (&j.ws, false)] {
            let mut out = Vec::new();
            for e in edges {
                let (a, b, var) = match e {
                    EdgeJson::Triple(a, b, x) => (idx(&t, a)?, idx(&t, b)?, x.clone()),
                    EdgeJson::Pair(a, b) => {
                        let (ia, ib) = (idx(&t, a)?, idx(&t, b)?);
                        let cands: Vec<&str> = t
                            .writes(ia)
                            .map(|e| e.var.as_str())
                            .filter(|x| if is_rf { t.reads_var(ib, x) } else { t.writes_var(ib, x) })
                            .collect();
                        match cands.as_slice() {
                            [x] => (ia, ib, x.to_string()),
                            _ => return Err(TraceError::Ambiguous(a.clone(), b.clone())),
                        }
                    }
                };
                out.push(Dep { from: a, to: b, var });
            }
            out.sort();
            out.dedup();
            if is_rf {
                t.rf = out;
            } else {
                t.ws = out;
            }
        }
        // ws may be given as a chain; close it per variable
        let vars: Vec<String> = t.ws.iter().map(|d| d.var.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        for x in vars {
            let r = crate::rel::Rel::from_pairs(t.n(), t.ws.iter().filter(|d| d.var == x).map(|d| (d.from, d.to)));
            let closed: Vec<(usize, usize)> = r.plus().pairs().collect();
            t.ws.retain(|d| d.var != x);
            t.ws.extend(closed.into_iter().map(|(a, b)| Dep::new(a, b, &x)));
        }
        t.ws.sort();
        t.validate()?;
        Ok(t)
    }

    /// Checks the structural invariants: unique ids, init writes every variable and precedes
    /// everything in program order, every read has exactly one matching rf source, and the
    /// store order of each variable is a strict total order of its writers starting at init.
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: String| Err(TraceError::Invalid(m));
        let n = self.n();
        if n > crate::rel::MAX_NODES {
            return bad(format!("at most {} transactions are supported", crate::rel::MAX_NODES));
        }
        let mut seen = BTreeSet::new();
        for t in &self.txns {
            if !seen.insert(&t.tid) {
                return bad(format!("duplicate transaction `{}`", t.tid));
            }
        }
        let vars = self.vars();
        if self.txns[0].events.iter().any(|e| e.kind != EventKind::Write) {
            return bad("the init transaction may only write".into());
        }
        if vars.iter().collect::<BTreeSet<_>>().len() != vars.len() {
            return bad("the init transaction writes a variable twice".into());
        }
        let po = self.po_rel();
        if !po.is_acyclic() || po.plus() != po {
            return bad("po must be a transitive strict order".into());
        }
        for i in 1..n {
            if !po.has(0, i) {
                return bad(format!("init must precede `{}` in po", self.tid(i)));
            }
            for e in &self.txns[i].events {
                if !vars.contains(&e.var.as_str()) {
                    return bad(format!("variable `{}` is not initialized", e.var));
                }
            }
        }
        for d in self.rf.iter().chain(&self.ws) {
            if d.from >= n || d.to >= n || d.from == d.to {
                return bad("dependency endpoints must be distinct transactions".into());
            }
        }
        for i in 0..n {
            for e in self.reads(i) {
                let srcs: Vec<usize> =
                    self.rf.iter().filter(|d| d.to == i && d.var == e.var).map(|d| d.from).collect();
                let [s] = srcs.as_slice() else {
                    return bad(format!("read of `{}` in `{}` needs exactly one rf source", e.var, self.tid(i)));
                };
                if self.written_value(*s, &e.var) != Some(e.value) {
                    return bad(format!(
                        "`{}` reads {}={} but `{}` does not write that value",
                        self.tid(i),
                        e.var,
                        e.value,
                        self.tid(*s)
                    ));
                }
            }
        }
        if self.rf.iter().any(|d| !self.reads_var(d.to, &d.var)) {
            return bad("rf edge into a transaction that does not read the variable".into());
        }
        for x in &vars {
            let writers: Vec<usize> = (0..n).filter(|&i| self.writes_var(i, x)).collect();
            let r = crate::rel::Rel::from_pairs(n, self.ws.iter().filter(|d| d.var == *x).map(|d| (d.from, d.to)));
            let k = writers.len();
            let ok = r.is_acyclic()
                && r.pairs().all(|(a, b)| writers.contains(&a) && writers.contains(&b))
                && r.pairs().count() == k * (k - 1) / 2
                && writers.iter().all(|&w| w == 0 || r.has(0, w));
            if !ok {
                return bad(format!("ws on `{x}` is not a total order of its writers after init"));
            }
        }
        if self.ws.iter().any(|d| !vars.contains(&d.var.as_str())) {
            return bad("ws on an unknown variable".into());
        }
        Ok(())
    }
}
