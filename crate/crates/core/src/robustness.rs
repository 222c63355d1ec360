//! Robustness deciders: brute-force trace-set comparison, reductions to serial
//! reachability, and the commutativity-graph proofs.

use crate::exec::{init_tid, Overflow, DEFAULT_SCHEDULE_BUDGET};
use crate::graph::DEFAULT_CYCLE_BUDGET;
use crate::lang::{compile, Compiled, NormalizeError, Value};
use crate::membership::{member, oracle_member, Model, ORACLE_MAX_TXNS};
use crate::movers;
use crate::trace::{Dep, Event, Trace};
use crate::transform::{check_robust_pcsi_via_monitor, split};
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BruteForce,
    Reduction,
    Movers,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BruteForce, Method::Reduction, Method::Movers];

    pub fn name(self) -> &'static str {
        match self {
            Method::BruteForce => "bruteforce",
            Method::Reduction => "reduction",
            Method::Movers => "movers",
        }
    }

    /// Whether the method decides (or, for movers, can prove) the pair.
    pub fn applies(self, from: Model, to: Model) -> bool {
        match self {
            Method::BruteForce => from.weaker_than(to),
            Method::Reduction | Method::Movers => {
                matches!((from, to), (Model::CC, Model::PC) | (Model::PC, Model::SI) | (Model::CC, Model::SI))
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Method, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method `{s}` (expected bruteforce, reduction or movers)"))
    }
}

/// A trace in the difference of two trace sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub witness: Trace,
    /// The witness is a trace of the split program rather than of the program itself.
    pub of_split: bool,
    /// Serial schedule of the instrumented program that reached the assertion.
    pub schedule: Option<Vec<String>>,
    /// Happens-before cycle of the witness, rendered.
    pub cycle: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Robust,
    Violation(Box<Violation>),
    Unknown(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Robust => "robust",
            Outcome::Violation(_) => "violation",
            Outcome::Unknown(_) => "unknown",
        }
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Outcome::Violation(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub from: Model,
    pub to: Model,
    pub method: Method,
    pub outcome: Outcome,
    pub stats: BTreeMap<&'static str, u64>,
}

impl Verdict {
    fn new(from: Model, to: Model, method: Method, outcome: Outcome) -> Verdict {
        Verdict { from, to, method, outcome, stats: BTreeMap::new() }
    }

    pub fn is_robust(&self) -> bool {
        self.outcome == Outcome::Robust
    }

    pub fn is_violation(&self) -> bool {
        matches!(self.outcome, Outcome::Violation(_))
    }

    pub fn pair(&self) -> String {
        pair_name(self.from, self.to)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "pair": self.pair(),
            "from": self.from,
            "to": self.to,
            "method": self.method,
            "verdict": self.outcome.label(),
            "stats": self.stats,
        });
        match &self.outcome {
            Outcome::Robust => {}
            Outcome::Unknown(r) => v["reason"] = json!(r),
            Outcome::Violation(w) => {
                v["witness"] = w.witness.to_json_value();
                v["witness_program"] = json!(if w.of_split { "split" } else { "original" });
                if let Some(s) = &w.schedule {
                    v["schedule"] = json!(s);
                }
                if let Some(c) = &w.cycle {
                    v["cycle"] = json!(c);
                }
            }
        }
        v
    }
}

pub fn pair_name(from: Model, to: Model) -> String {
    format!("{}-{}", from, to).to_ascii_lowercase()
}

/// Exploration limits shared by all methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Candidate traces, serial schedules, or monitor states, depending on the method.
    pub schedules: usize,
    /// Simple cycles enumerated per graph.
    pub cycles: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { schedules: DEFAULT_SCHEDULE_BUDGET, cycles: DEFAULT_CYCLE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RobustnessError {
    #[error("{from} is not weaker than {to}")]
    Pair { from: Model, to: Model },
    #[error("method {method} does not apply to {pair}")]
    NotApplicable { method: Method, pair: String },
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// How candidate traces are classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classifier {
    /// Axiomatic witness search (`oracle_member`).
    Oracle,
    /// Happens-before characterizations (`member`).
    Characterization,
}

/// All traces of `c` in which each process executed a prefix of its transactions: every
/// choice of rf source per read and store order per variable whose transaction-local
/// evaluation is consistent (no rf/po cycle, every assume passes). Sorted canonically.
pub fn candidate_traces(c: &Compiled, budget: usize) -> Result<Vec<Trace>, Overflow> {
    let mut out = Vec::new();
    let init = init_tid(c);
    let mut lens = vec![0usize; c.procs.len()];
    loop {
        let chosen: Vec<usize> = {
            let mut v: Vec<usize> =
                c.procs.iter().zip(&lens).flat_map(|(p, &l)| p.txns[..l].iter().copied()).collect();
            v.sort_unstable();
            v
        };
        candidates_for(c, &init, &chosen, budget, &mut out)?;
        // odometer over prefix lengths
        let mut i = 0;
        loop {
            if i == lens.len() {
                out.sort();
                return Ok(out);
            }
            if lens[i] < c.procs[i].txns.len() {
                lens[i] += 1;
                break;
            }
            lens[i] = 0;
            i += 1;
        }
    }
}

fn candidates_for(c: &Compiled, init: &str, chosen: &[usize], budget: usize, out: &mut Vec<Trace>) -> Result<(), Overflow> {
    // every read with its possible sources; None is init
    let mut slots: Vec<(usize, usize, Vec<Option<usize>>)> = Vec::new();
    for &g in chosen {
        for (j, &(_, x)) in c.txns[g].reads.iter().enumerate() {
            let mut src = vec![None];
            src.extend(chosen.iter().filter(|&&w| w != g && c.txns[w].writes_var(x)).map(|&w| Some(w)));
            slots.push((g, j, src));
        }
    }
    let mut pick = vec![0usize; slots.len()];
    loop {
        if let Some(vals) = evaluate(c, chosen, &slots, &pick) {
            emit(c, init, chosen, &slots, &pick, &vals, budget, out)?;
        }
        let mut i = 0;
        loop {
            if i == slots.len() {
                return Ok(());
            }
            if pick[i] + 1 < slots[i].2.len() {
                pick[i] += 1;
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Evaluated transaction: values read (per read slot of the transaction) and written.
struct Eval {
    reads: Vec<Value>,
    writes: Vec<(usize, Value)>,
}

/// Runs the chosen transactions in an order compatible with po and the picked rf
/// sources. `None` if that order does not exist or some assume fails.
fn evaluate(
    c: &Compiled,
    chosen: &[usize],
    slots: &[(usize, usize, Vec<Option<usize>>)],
    pick: &[usize],
) -> Option<BTreeMap<usize, Eval>> {
    let src_of = |g: usize, j: usize| {
        slots.iter().zip(pick).find(|((t, k, _), _)| *t == g && *k == j).map(|((_, _, s), &p)| s[p]).unwrap()
    };
    let mut done: BTreeMap<usize, Eval> = BTreeMap::new();
    let mut regs: Vec<Vec<Value>> = c.procs.iter().map(|p| vec![0; p.regs.len()]).collect();
    let mut next = vec![0usize; c.procs.len()];
    let mut remaining = chosen.len();
    while remaining > 0 {
        let mut progressed = false;
        for (p, proc_) in c.procs.iter().enumerate() {
            let Some(&g) = proc_.txns.get(next[p]) else { continue };
            if !chosen.contains(&g) {
                continue;
            }
            let tx = &c.txns[g];
            let srcs: Vec<Option<usize>> = (0..tx.reads.len()).map(|j| src_of(g, j)).collect();
            if srcs.iter().flatten().any(|w| !done.contains_key(w)) {
                continue;
            }
            let mut vals = Vec::with_capacity(srcs.len());
            for (&(r, x), s) in tx.reads.iter().zip(&srcs) {
                let v = s.map_or(0, |w| done[&w].writes.iter().find(|(y, _)| *y == x).unwrap().1);
                regs[p][r] = v;
                vals.push(v);
            }
            let writes = tx.finish(&mut regs[p])?;
            done.insert(g, Eval { reads: vals, writes });
            next[p] += 1;
            remaining -= 1;
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    Some(done)
}

#[allow(clippy::too_many_arguments)]
fn emit(
    c: &Compiled,
    init: &str,
    chosen: &[usize],
    slots: &[(usize, usize, Vec<Option<usize>>)],
    pick: &[usize],
    vals: &BTreeMap<usize, Eval>,
    budget: usize,
    out: &mut Vec<Trace>,
) -> Result<(), Overflow> {
    let mut base = Trace::with_init(init, &c.vars, 0);
    let mut pos = BTreeMap::new();
    for &g in chosen {
        let tx = &c.txns[g];
        let e = &vals[&g];
        let mut ev: Vec<Event> =
            tx.reads.iter().zip(&e.reads).map(|(&(_, x), &v)| Event::read(&c.vars[x], v)).collect();
        ev.extend(e.writes.iter().map(|&(x, v)| Event::write(&c.vars[x], v)));
        pos.insert(g, base.push(&tx.tid, &c.procs[tx.proc_idx].pid, ev));
    }
    base.po_from_processes();
    for ((g, j, src), &p) in slots.iter().zip(pick) {
        let x = c.txns[*g].reads[*j].1;
        base.rf.push(Dep::new(src[p].map_or(0, |w| pos[&w]), pos[g], &c.vars[x]));
    }
    base.rf.sort();
    // store orders: every permutation of the writers of each variable
    let writers: Vec<Vec<usize>> = (0..c.vars.len())
        .map(|x| chosen.iter().filter(|&&g| c.txns[g].writes_var(x)).map(|g| pos[g]).collect())
        .collect();
    let mut perms: Vec<Vec<Vec<usize>>> = writers.iter().map(|w| permutations(w)).collect();
    let mut idx = vec![0usize; perms.len()];
    loop {
        if out.len() >= budget {
            return Err(Overflow(budget));
        }
        let mut t = base.clone();
        t.ws.clear();
        for (x, name) in c.vars.iter().enumerate() {
            let mut chain = vec![0];
            chain.extend(&perms[x][idx[x]]);
            t.set_ws_chain(name, &chain);
        }
        out.push(t);
        let mut i = 0;
        loop {
            if i == idx.len() {
                perms.clear();
                return Ok(());
            }
            if idx[i] + 1 < perms[i].len() {
                idx[i] += 1;
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn classify(t: &Trace, m: Model, how: Classifier) -> Result<bool, String> {
    match how {
        Classifier::Oracle => oracle_member(t, m).map_err(|e| e.to_string()),
        Classifier::Characterization => member(t, m).map_err(|e| e.to_string()),
    }
}

/// Compares the trace sets of `c` under `from` and `to` by enumeration. The witness is
/// the canonically least trace admitted by `from` but not by `to`.
pub fn bruteforce_robust_with(
    c: &Compiled,
    from: Model,
    to: Model,
    how: Classifier,
    budget: Budget,
) -> Result<Verdict, RobustnessError> {
    if !from.weaker_than(to) {
        return Err(RobustnessError::Pair { from, to });
    }
    let mut v = Verdict::new(from, to, Method::BruteForce, Outcome::Robust);
    if how == Classifier::Oracle && c.txns.len() > ORACLE_MAX_TXNS {
        v.outcome = Outcome::Unknown(format!(
            "{} transactions exceed the oracle limit of {ORACLE_MAX_TXNS}",
            c.txns.len()
        ));
        return Ok(v);
    }
    let cands = match candidate_traces(c, budget.schedules) {
        Ok(cs) => cs,
        Err(o) => {
            v.outcome = Outcome::Unknown(o.to_string());
            return Ok(v);
        }
    };
    v.stats.insert("candidates", cands.len() as u64);
    let mut in_to = 0u64;
    for t in cands {
        let r = classify(&t, to, how).and_then(|y| if y { Ok((true, true)) } else { classify(&t, from, how).map(|x| (x, false)) });
        match r {
            Err(e) => {
                v.outcome = Outcome::Unknown(e);
                return Ok(v);
            }
            Ok((_, true)) => in_to += 1,
            Ok((true, false)) => {
                let cycle = t.hb_graph().simple_cycles(1).ok().and_then(|cs| cs.first().map(|c| c.display(&t).to_string()));
                v.outcome = Outcome::Violation(Box::new(Violation { witness: t, of_split: false, schedule: None, cycle }));
                break;
            }
            Ok((false, false)) => {}
        }
    }
    v.stats.insert("traces_to", in_to);
    Ok(v)
}

/// Brute force with the axiomatic oracle.
pub fn bruteforce_robust(c: &Compiled, from: Model, to: Model, budget: Budget) -> Result<Verdict, RobustnessError> {
    bruteforce_robust_with(c, from, to, Classifier::Oracle, budget)
}

/// CC vs PC through the split program: `P` is robust iff `P_RW` is robust against CC
/// relative to SER. Split traces are classified by the happens-before characterizations.
pub fn reduction_robust_cc_pc(c: &Compiled, budget: Budget) -> Result<Verdict, RobustnessError> {
    let sp = split(&c.source)?;
    let cs = compile(&sp.program)?;
    let sub = bruteforce_robust_with(&cs, Model::CC, Model::SER, Classifier::Characterization, budget)?;
    let mut v = Verdict::new(Model::CC, Model::PC, Method::Reduction, sub.outcome);
    if let Outcome::Violation(w) = &mut v.outcome {
        w.of_split = true;
    }
    v.stats = sub.stats;
    v.stats.insert("split_transactions", cs.txns.len() as u64);
    Ok(v)
}

/// PC vs SI through the monitor instrumentation.
pub fn reduction_robust_pc_si(c: &Compiled, budget: Budget) -> Result<Verdict, RobustnessError> {
    Ok(check_robust_pcsi_via_monitor(c, budget))
}

/// Conjunction of two sub-verdicts for CC vs SI. A failing leg decides; otherwise an
/// unknown leg makes the result unknown.
fn conjoin(method: Method, a: Verdict, b: Verdict) -> Verdict {
    let mut stats = BTreeMap::new();
    for (k, x) in a.stats.iter().chain(&b.stats) {
        *stats.entry(*k).or_insert(0) += x;
    }
    let outcome = match (a.outcome, b.outcome) {
        (Outcome::Violation(w), _) | (_, Outcome::Violation(w)) => Outcome::Violation(w),
        (Outcome::Unknown(r), _) | (_, Outcome::Unknown(r)) => Outcome::Unknown(r),
        (Outcome::Robust, Outcome::Robust) => Outcome::Robust,
    };
    Verdict { from: Model::CC, to: Model::SI, method, outcome, stats }
}

/// CC vs SI as robustness for CC vs PC and for PC vs SI.
pub fn robust_cc_si(c: &Compiled, budget: Budget) -> Result<Verdict, RobustnessError> {
    let a = reduction_robust_cc_pc(c, budget)?;
    let b = reduction_robust_pc_si(c, budget)?;
    Ok(conjoin(Method::Reduction, a, b))
}

/// Runs one method on one pair.
pub fn check(c: &Compiled, from: Model, to: Model, method: Method, budget: Budget) -> Result<Verdict, RobustnessError> {
    if !from.weaker_than(to) {
        return Err(RobustnessError::Pair { from, to });
    }
    if !method.applies(from, to) {
        return Err(RobustnessError::NotApplicable { method, pair: pair_name(from, to) });
    }
    match (method, from, to) {
        (Method::BruteForce, ..) => bruteforce_robust(c, from, to, budget),
        (Method::Reduction, Model::CC, Model::PC) => reduction_robust_cc_pc(c, budget),
        (Method::Reduction, Model::PC, Model::SI) => reduction_robust_pc_si(c, budget),
        (Method::Reduction, ..) => robust_cc_si(c, budget),
        (Method::Movers, ..) => movers_verdict(c, from, to, budget),
    }
}

/// Robust when the commutativity dependency graph has no matching cycle; unknown otherwise.
pub fn movers_verdict(c: &Compiled, from: Model, to: Model, budget: Budget) -> Result<Verdict, RobustnessError> {
    let sp = split(&c.source)?;
    let g = movers::build_graph(&sp, budget.schedules)?;
    let prove = |from: Model| match from {
        Model::CC => movers::prove_robust_cc_pc(&g, budget.cycles),
        _ => movers::prove_robust_pc_si(&g, budget.cycles),
    };
    let proofs = match (from, to) {
        (Model::CC, Model::SI) => vec![prove(Model::CC), prove(Model::PC)],
        _ => vec![prove(from)],
    };
    let outcome = match proofs.into_iter().find(|p| !p.is_robust()) {
        None => Outcome::Robust,
        Some(p) => Outcome::Unknown(format!("inconclusive: {p}")),
    };
    let mut v = Verdict::new(from, to, Method::Movers, outcome);
    v.stats.insert("graph_nodes", g.nodes.len() as u64);
    v.stats.insert("graph_edges", g.edges.len() as u64);
    if g.overflow {
        v.stats.insert("mover_overflow", 1);
    }
    Ok(v)
}
