//! Serial execution: transactions run atomically, one after another.

use crate::lang::{CTest, Compiled, Value};
use crate::trace::{Dep, Event, Trace};
use std::collections::BTreeSet;
use std::fmt;

pub const DEFAULT_SCHEDULE_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("schedule budget of {0} exceeded")]
pub struct Overflow(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("transaction `{0}` blocked on a failed assume")]
    Blocked(String),
    #[error("unknown transaction `{0}`")]
    UnknownTid(String),
    #[error("schedule does not respect program order at `{0}`")]
    NotPoRespecting(String),
}

/// Shared variables and per-process registers, indexed like the compiled program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoreState {
    pub shared: Vec<Value>,
    pub regs: Vec<Vec<Value>>,
}

impl StoreState {
    pub fn initial(c: &Compiled) -> StoreState {
        StoreState { shared: vec![0; c.vars.len()], regs: c.procs.iter().map(|p| vec![0; p.regs.len()]).collect() }
    }

    pub fn display<'a>(&'a self, c: &'a Compiled) -> impl fmt::Display + 'a {
        StateDisplay { s: self, c }
    }
}

struct StateDisplay<'a> {
    s: &'a StoreState,
    c: &'a Compiled,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sh: Vec<String> = self.c.vars.iter().zip(&self.s.shared).map(|(x, v)| format!("{x}={v}")).collect();
        write!(f, "{}", sh.join(" "))?;
        for (p, regs) in self.c.procs.iter().zip(&self.s.regs) {
            let rs: Vec<String> = p.regs.iter().zip(regs).map(|(r, v)| format!("{r}={v}")).collect();
            write!(f, " | {}: {}", p.pid, rs.join(" "))?;
        }
        Ok(())
    }
}

/// Outcome of executing one transaction atomically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Values read (var, value) and written (var, value).
    Commit { reads: Vec<(usize, Value)>, writes: Vec<(usize, Value)> },
    Blocked,
    AssertFailed,
}

/// Executes transaction `t` on `s`. On `Blocked` or `AssertFailed` the state is unspecified.
pub fn step(c: &Compiled, t: usize, s: &mut StoreState) -> Step {
    let tx = &c.txns[t];
    let regs = &mut s.regs[tx.proc_idx];
    let mut reads = Vec::with_capacity(tx.reads.len());
    for &(r, x) in &tx.reads {
        regs[r] = s.shared[x];
        reads.push((x, s.shared[x]));
    }
    for test in &tx.tests {
        match test {
            CTest::Assume(Some(e)) if e.eval(regs) == 0 => return Step::Blocked,
            CTest::Assert(e) if e.eval(regs) == 0 => return Step::AssertFailed,
            _ => {}
        }
    }
    let writes: Vec<(usize, Value)> = tx.writes.iter().map(|(x, e)| (*x, e.eval(regs))).collect();
    let vals: Vec<Value> = tx.lets.iter().map(|(_, e)| e.eval(regs)).collect();
    for ((r, _), v) in tx.lets.iter().zip(vals) {
        regs[*r] = v;
    }
    for &(x, v) in &writes {
        s.shared[x] = v;
    }
    Step::Commit { reads, writes }
}

/// Id of the init transaction: `T0` unless the program already uses it.
pub fn init_tid(c: &Compiled) -> String {
    let mut name = "T0".to_string();
    while c.txn_index(&name).is_some() {
        name = if name == "T0" { "init".to_string() } else { format!("{name}_") };
    }
    name
}

/// A committed transaction together with the writers its reads observed
/// (`None` = init).
#[derive(Clone, Debug)]
pub struct Committed {
    pub txn: usize,
    pub reads: Vec<(usize, Value, Option<usize>)>,
    pub writes: Vec<(usize, Value)>,
}

/// Builds the trace of a serial execution. Transactions appear in program order.
pub fn trace_of(c: &Compiled, init: &str, run: &[Committed]) -> Trace {
    let mut t = Trace::with_init(init, &c.vars, 0);
    let mut order: Vec<usize> = run.iter().map(|s| s.txn).collect();
    order.sort_unstable();
    let mut pos = vec![usize::MAX; c.txns.len()];
    for &g in &order {
        let s = run.iter().find(|s| s.txn == g).unwrap();
        let tx = &c.txns[g];
        let mut ev: Vec<Event> = s.reads.iter().map(|&(x, v, _)| Event::read(&c.vars[x], v)).collect();
        ev.extend(s.writes.iter().map(|&(x, v)| Event::write(&c.vars[x], v)));
        pos[g] = t.push(&tx.tid, &c.procs[tx.proc_idx].pid, ev);
    }
    t.po_from_processes();
    let at = |w: Option<usize>| w.map_or(0, |g| pos[g]);
    for s in run {
        for &(x, _, w) in &s.reads {
            t.rf.push(Dep::new(at(w), pos[s.txn], &c.vars[x]));
        }
    }
    t.rf.sort();
    for (x, name) in c.vars.iter().enumerate() {
        let mut chain = vec![0];
        chain.extend(run.iter().filter(|s| s.writes.iter().any(|w| w.0 == x)).map(|s| pos[s.txn]));
        t.set_ws_chain(name, &chain);
    }
    t
}

/// Runs the schedule (a sequence of transaction ids, possibly a po-prefix of the
/// program) and returns the final state and its trace.
pub fn run_serial(c: &Compiled, schedule: &[&str]) -> Result<(StoreState, Trace), RunError> {
    let mut s = StoreState::initial(c);
    let mut next = vec![0usize; c.procs.len()];
    let mut last_writer: Vec<Option<usize>> = vec![None; c.vars.len()];
    let mut run = Vec::new();
    for tid in schedule {
        let g = c.txn_index(tid).ok_or_else(|| RunError::UnknownTid(tid.to_string()))?;
        let p = c.txns[g].proc_idx;
        if c.procs[p].txns.get(next[p]) != Some(&g) {
            return Err(RunError::NotPoRespecting(tid.to_string()));
        }
        next[p] += 1;
        match step(c, g, &mut s) {
            Step::Commit { reads, writes } => {
                let reads = reads.into_iter().map(|(x, v)| (x, v, last_writer[x])).collect();
                for &(x, _) in &writes {
                    last_writer[x] = Some(g);
                }
                run.push(Committed { txn: g, reads, writes });
            }
            // an assert failure ends the run like a failed assume
            Step::Blocked | Step::AssertFailed => return Err(RunError::Blocked(tid.to_string())),
        }
    }
    Ok((s, trace_of(c, &init_tid(c), &run)))
}

/// Depth-first walk over all serial interleavings.
struct Walker<'a, F> {
    c: &'a Compiled,
    budget: usize,
    leaves: usize,
    next: Vec<usize>,
    state: StoreState,
    last_writer: Vec<Option<usize>>,
    run: Vec<Committed>,
    visit: F,
}

/// What the walker reports to its visitor.
pub enum Visit<'r> {
    /// A (possibly partial) serial execution; `complete` when every process finished.
    Run { run: &'r [Committed], complete: bool },
    AssertFailed { run: &'r [Committed], txn: usize },
}

impl<F: FnMut(&Compiled, Visit<'_>) -> bool> Walker<'_, F> {
    fn go(&mut self) -> Result<bool, Overflow> {
        let c = self.c;
        let mut any = false;
        for p in 0..c.procs.len() {
            let Some(&g) = c.procs[p].txns.get(self.next[p]) else { continue };
            any = true;
            let saved = (self.state.clone(), self.last_writer.clone());
            match step(c, g, &mut self.state) {
                Step::Commit { reads, writes } => {
                    let reads = reads.into_iter().map(|(x, v)| (x, v, self.last_writer[x])).collect();
                    for &(x, _) in &writes {
                        self.last_writer[x] = Some(g);
                    }
                    self.run.push(Committed { txn: g, reads, writes });
                    self.next[p] += 1;
                    let done = self.go()?;
                    self.next[p] -= 1;
                    self.run.pop();
                    if done {
                        return Ok(true);
                    }
                }
                Step::Blocked => self.leaf()?,
                Step::AssertFailed => {
                    self.leaf()?;
                    if !(self.visit)(c, Visit::AssertFailed { run: &self.run, txn: g }) {
                        return Ok(true);
                    }
                }
            }
            (self.state, self.last_writer) = saved;
        }
        if !any {
            self.leaf()?;
        }
        Ok(!(self.visit)(c, Visit::Run { run: &self.run, complete: !any }))
    }

    fn leaf(&mut self) -> Result<(), Overflow> {
        self.leaves += 1;
        if self.leaves > self.budget {
            return Err(Overflow(self.budget));
        }
        Ok(())
    }
}

/// Visits every serial execution (each reachable prefix once per path). The visitor
/// returns `false` to stop. The budget bounds the number of maximal schedules.
pub fn walk_serial(
    c: &Compiled,
    budget: usize,
    visit: impl FnMut(&Compiled, Visit<'_>) -> bool,
) -> Result<(), Overflow> {
    let mut w = Walker {
        c,
        budget,
        leaves: 0,
        next: vec![0; c.procs.len()],
        state: StoreState::initial(c),
        last_writer: vec![None; c.vars.len()],
        run: Vec::new(),
        visit,
    };
    w.go().map(|_| ())
}

/// Traces of all complete serial executions, deduplicated, in canonical order.
pub fn enumerate_ser_traces(c: &Compiled, budget: usize) -> Result<Vec<Trace>, Overflow> {
    let init = init_tid(c);
    let mut out = BTreeSet::new();
    walk_serial(c, budget, |c, v| {
        if let Visit::Run { run, complete: true } = v {
            out.insert(trace_of(c, &init, run));
        }
        true
    })?;
    Ok(out.into_iter().collect())
}

/// Traces of all serial executions where each process ran some prefix of its transactions.
pub fn enumerate_ser_prefix_traces(c: &Compiled, budget: usize) -> Result<Vec<Trace>, Overflow> {
    let init = init_tid(c);
    let mut out = BTreeSet::new();
    walk_serial(c, budget, |c, v| {
        if let Visit::Run { run, .. } = v {
            out.insert(trace_of(c, &init, run));
        }
        true
    })?;
    Ok(out.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reachability {
    /// Schedule of transaction ids whose last transaction fails an assertion.
    Reachable(Vec<String>),
    Unreachable,
}

pub fn check_assertion_reachable(c: &Compiled, budget: usize) -> Result<Reachability, Overflow> {
    let mut found = None;
    walk_serial(c, budget, |c, v| {
        if let Visit::AssertFailed { run, txn } = v {
            let mut s: Vec<String> = run.iter().map(|s| c.txns[s.txn].tid.clone()).collect();
            s.push(c.txns[txn].tid.clone());
            found = Some(s);
            return false;
        }
        true
    })?;
    Ok(found.map_or(Reachability::Unreachable, Reachability::Reachable))
}
