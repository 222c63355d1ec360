//! Monitor for PC-vs-SI robustness. Each transaction is rewritten so that a serial run
//! simulates PC by executing read and write parts separately, picks one candidate
//! transaction whose writes are delayed, and tracks happens-before paths starting at it.
//! The rewritten program is executed natively; [`Instrumented::to_text`] prints it.

use crate::exec::{init_tid, trace_of, Committed, Overflow};
use crate::lang::{expr_to_string, stmt_to_string, CExpr, CTest, Compiled, Stmt, Value};
use crate::membership::{member_pc, member_si, Model};
use crate::robustness::{Budget, Method, Outcome, Verdict, Violation};
use crate::trace::{Half, Trace};
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

/// ⊥ in the `hb` lattice; compares greater than 0, 1 and 2.
const BOT: u8 = 3;

/// A program prepared for monitored execution.
#[derive(Clone, Debug)]
pub struct Instrumented {
    pub compiled: Compiled,
}

pub fn instrument(c: &Compiled) -> Instrumented {
    Instrumented { compiled: c.clone() }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MonitorError {
    #[error(transparent)]
    Overflow(#[from] Overflow),
    #[error("monitor invariant broken: {0}")]
    Invariant(String),
}

/// A serial run of the instrumented program that fails the assertion.
#[derive(Clone, Debug)]
pub struct MonitorViolation {
    /// Executed steps, e.g. `t1#x` (candidate choosing `varW = x`), `t2.r`, `t2.w`.
    pub schedule: Vec<String>,
    /// The run projected to a trace of the original program.
    pub witness: Trace,
    pub candidate: String,
    pub var_w: String,
}

#[derive(Clone, Debug)]
pub enum MonitorOutcome {
    Unreachable { states: usize },
    Reachable(Box<MonitorViolation>),
}

/// Placement of a transaction's statements into its read and write parts.
struct Shape {
    has_r: bool,
    has_w: bool,
    tests_in_read: bool,
}

fn shape(c: &Compiled, g: usize) -> Shape {
    let t = &c.txns[g];
    let has_w = !t.writes.is_empty();
    let has_r = !t.reads.is_empty() || !has_w;
    Shape { has_r, has_w, tests_in_read: has_r }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Start,
    /// Read part done, write part pending.
    Mid,
    /// After the candidate (`assume false`).
    Disabled,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    shared: Vec<Value>,
    regs: Vec<Vec<Value>>,
    pc: Vec<usize>,
    phase: Vec<Phase>,
    done: bool,
    var_w: Option<usize>,
    hb_r: Vec<u8>,
    hb_w: Vec<u8>,
    rd: u64,
    wr: u64,
    hb_p: Vec<u8>,
    rd_l: Vec<u64>,
    wr_l: Vec<u64>,
}

/// One executed part, as seen by the original program.
#[derive(Clone, Debug)]
struct Unit {
    proc_idx: usize,
    txn: usize,
    reads: Vec<(usize, Value)>,
    writes: Vec<(usize, Value)>,
    label: String,
}

enum Step {
    Next(State, Unit),
    AssertFailed(Unit),
}

struct Part {
    reads: bool,
    tests: bool,
    writes: bool,
    lets: bool,
}

impl Part {
    fn read(sh: &Shape) -> Part {
        Part { reads: true, tests: sh.tests_in_read, writes: false, lets: !sh.has_w }
    }

    fn write(sh: &Shape) -> Part {
        Part { reads: false, tests: !sh.tests_in_read, writes: true, lets: true }
    }
}

fn assumes_pass(tests: &[CTest], regs: &[Value]) -> bool {
    tests.iter().all(|t| !matches!(t, CTest::Assume(Some(e)) if e.eval(regs) == 0))
}

fn lower(a: u8, b: u8) -> u8 {
    a.min(b)
}

struct Explorer<'a> {
    c: &'a Compiled,
    budget: usize,
    seen: HashSet<State>,
    path: Vec<Unit>,
}

impl Explorer<'_> {
    fn successors(&self, s: &State) -> Result<Vec<Step>, MonitorError> {
        let c = self.c;
        let mut out = Vec::new();
        for p in 0..c.procs.len() {
            let Some(&g) = c.procs[p].txns.get(s.pc[p]) else { continue };
            let sh = shape(c, g);
            match s.phase[p] {
                Phase::Disabled => {}
                Phase::Mid => {
                    let r = if s.done {
                        self.tracked(s, p, g, &Part::write(&sh))?
                    } else {
                        self.plain(s, p, g, &Part::write(&sh))
                    };
                    out.extend(r.map(|st| finish_txn(st, p)));
                }
                Phase::Start if !s.done => {
                    if sh.has_r {
                        out.extend(self.plain(s, p, g, &Part::read(&sh)).map(|st| after_read(st, p, &sh)));
                    } else {
                        out.extend(self.plain(s, p, g, &Part::write(&sh)).map(|st| finish_txn(st, p)));
                    }
                    if sh.has_w {
                        for &(x, _) in &c.txns[g].writes {
                            out.extend(self.candidate(s, p, g, x));
                        }
                    }
                }
                Phase::Start => {
                    let mut t = s.clone();
                    t.rd_l[p] = 0;
                    t.wr_l[p] = 0;
                    if sh.has_r {
                        let r = self.tracked(&t, p, g, &Part::read(&sh))?;
                        out.extend(r.map(|st| after_read(st, p, &sh)));
                    } else {
                        out.extend(self.tracked(&t, p, g, &Part::write(&sh))?.map(|st| finish_txn(st, p)));
                    }
                }
            }
        }
        Ok(out)
    }

    fn label(&self, g: usize, half: Half) -> String {
        let sh = shape(self.c, g);
        let tid = &self.c.txns[g].tid;
        match (sh.has_r && sh.has_w, half) {
            (false, _) => tid.clone(),
            (true, Half::Read) => format!("{tid}.r"),
            (true, Half::Write) => format!("{tid}.w"),
        }
    }

    /// Executes a part without touching the auxiliary variables.
    fn plain(&self, s: &State, p: usize, g: usize, part: &Part) -> Option<Step> {
        let tx = &self.c.txns[g];
        let mut t = s.clone();
        let half = if part.writes { Half::Write } else { Half::Read };
        let mut unit = Unit { proc_idx: p, txn: g, reads: vec![], writes: vec![], label: self.label(g, half) };
        if part.reads {
            for &(r, x) in &tx.reads {
                t.regs[p][r] = t.shared[x];
                unit.reads.push((x, t.shared[x]));
            }
        }
        if part.tests && !assumes_pass(&tx.tests, &t.regs[p]) {
            return None;
        }
        if part.writes {
            unit.writes = tx.writes.iter().map(|(x, e)| (*x, e.eval(&t.regs[p]))).collect();
            for &(x, v) in &unit.writes {
                t.shared[x] = v;
            }
        }
        if part.lets {
            apply_lets(&tx.lets, &mut t.regs[p]);
        }
        Some(Step::Next(t, unit))
    }

    /// The candidate: its reads run and are recorded, one written variable becomes `varW`,
    /// its writes are not applied and its process stops.
    fn candidate(&self, s: &State, p: usize, g: usize, var_w: usize) -> Option<Step> {
        let tx = &self.c.txns[g];
        let mut t = s.clone();
        let mut unit = Unit {
            proc_idx: p,
            txn: g,
            reads: vec![],
            writes: vec![],
            label: format!("{}#{}", tx.tid, self.c.vars[var_w]),
        };
        for &(r, x) in &tx.reads {
            t.regs[p][r] = t.shared[x];
            unit.reads.push((x, t.shared[x]));
            t.hb_r[x] = 0;
            t.rd |= 1 << x;
        }
        if !assumes_pass(&tx.tests, &t.regs[p]) {
            return None;
        }
        t.var_w = Some(var_w);
        t.done = true;
        t.phase[p] = Phase::Disabled;
        Some(Step::Next(t, unit))
    }

    /// Executes a part with happens-before tracking. `None` if an assume blocks it.
    fn tracked(&self, s: &State, p: usize, g: usize, part: &Part) -> Result<Option<Step>, MonitorError> {
        let tx = &self.c.txns[g];
        let mut t = s.clone();
        let half = if part.writes { Half::Write } else { Half::Read };
        let mut unit = Unit { proc_idx: p, txn: g, reads: vec![], writes: vec![], label: self.label(g, half) };
        // I(begin)
        let mut hb = match t.hb_p[p] {
            h if h < 2 => 0,
            2 => 2,
            _ => BOT,
        };
        // hb continues through an access to a variable some tracked transaction wrote
        let via_write = |t: &State, hb: &mut u8, x: usize| {
            if t.wr >> x & 1 == 1 {
                if t.hb_w[x] != 2 {
                    *hb = 0;
                } else if *hb == BOT {
                    *hb = t.hb_w[x];
                }
            }
        };
        if part.reads {
            for &(r, x) in &tx.reads {
                t.regs[p][r] = t.shared[x];
                unit.reads.push((x, t.shared[x]));
                t.rd_l[p] |= 1 << x;
                via_write(&t, &mut hb, x);
            }
        }
        if part.tests && !assumes_pass(&tx.tests, &t.regs[p]) {
            return Ok(None);
        }
        if part.writes {
            for (x, e) in &tx.writes {
                let v = e.eval(&t.regs[p]);
                unit.writes.push((*x, v));
                t.wr_l[p] |= 1 << x;
                via_write(&t, &mut hb, *x);
                if t.rd >> x & 1 == 1 {
                    if t.hb_r[*x] == BOT {
                        return Err(MonitorError::Invariant(format!("hbR[{}] unset for a variable in rdSet", self.c.vars[*x])));
                    }
                    hb = lower(hb, (t.hb_r[*x] + 1).min(2));
                }
            }
            for &(x, v) in &unit.writes {
                t.shared[x] = v;
            }
        }
        if part.lets {
            apply_lets(&tx.lets, &mut t.regs[p]);
        }
        // I(commit)
        if hb == BOT {
            return Ok(None);
        }
        if hb != 2 && t.var_w.is_some_and(|w| t.wr_l[p] >> w & 1 == 1) {
            return Ok(Some(Step::AssertFailed(unit)));
        }
        t.hb_p[p] = lower(t.hb_p[p], hb);
        for x in 0..self.c.vars.len() {
            if t.wr_l[p] >> x & 1 == 1 {
                t.hb_w[x] = lower(t.hb_w[x], hb);
            }
            if t.rd_l[p] >> x & 1 == 1 {
                t.hb_r[x] = lower(t.hb_r[x], hb);
            }
        }
        t.rd |= t.rd_l[p];
        t.wr |= t.wr_l[p];
        Ok(Some(Step::Next(t, unit)))
    }

    fn dfs(&mut self, s: State) -> Result<Option<(State, Unit)>, MonitorError> {
        if !self.seen.insert(s.clone()) {
            return Ok(None);
        }
        if self.seen.len() > self.budget {
            return Err(Overflow(self.budget).into());
        }
        for step in self.successors(&s)? {
            match step {
                Step::AssertFailed(u) => return Ok(Some((s, u))),
                Step::Next(t, u) => {
                    self.path.push(u);
                    if let Some(hit) = self.dfs(t)? {
                        return Ok(Some(hit));
                    }
                    self.path.pop();
                }
            }
        }
        Ok(None)
    }
}

fn apply_lets(lets: &[(usize, CExpr)], regs: &mut [Value]) {
    let vals: Vec<Value> = lets.iter().map(|(_, e)| e.eval(regs)).collect();
    for ((r, _), v) in lets.iter().zip(vals) {
        regs[*r] = v;
    }
}

fn after_read(step: Step, p: usize, sh: &Shape) -> Step {
    match step {
        Step::Next(mut t, u) => {
            if sh.has_w {
                t.phase[p] = Phase::Mid;
            } else {
                t.pc[p] += 1;
            }
            Step::Next(t, u)
        }
        a => a,
    }
}

fn finish_txn(step: Step, p: usize) -> Step {
    match step {
        Step::Next(mut t, u) => {
            t.phase[p] = Phase::Start;
            t.pc[p] += 1;
            Step::Next(t, u)
        }
        a => a,
    }
}

/// Explores all serial runs of the instrumented program (states are deduplicated).
/// The budget bounds the number of distinct states.
pub fn explore_monitor(inst: &Instrumented, budget: usize) -> Result<MonitorOutcome, MonitorError> {
    let c = &inst.compiled;
    let n = c.procs.len();
    let nv = c.vars.len();
    let init = State {
        shared: vec![0; nv],
        regs: c.procs.iter().map(|p| vec![0; p.regs.len()]).collect(),
        pc: vec![0; n],
        phase: vec![Phase::Start; n],
        done: false,
        var_w: None,
        hb_r: vec![BOT; nv],
        hb_w: vec![BOT; nv],
        rd: 0,
        wr: 0,
        hb_p: vec![BOT; n],
        rd_l: vec![0; n],
        wr_l: vec![0; n],
    };
    let mut ex = Explorer { c, budget, seen: HashSet::new(), path: Vec::new() };
    match ex.dfs(init)? {
        None => Ok(MonitorOutcome::Unreachable { states: ex.seen.len() }),
        Some((last, unit)) => Ok(MonitorOutcome::Reachable(Box::new(project(c, &ex.path, &last, unit)))),
    }
}

/// Turns a violating run into a trace of the original program. Write parts still pending
/// when the assertion fails run afterwards, and the candidate's delayed writes run last.
fn project(c: &Compiled, path: &[Unit], last: &State, violating: Unit) -> MonitorViolation {
    let mut units: Vec<Unit> = path.to_vec();
    let vp = violating.proc_idx;
    units.push(violating);
    let eval_writes = |g: usize, regs: &[Value]| -> Vec<(usize, Value)> {
        c.txns[g].writes.iter().map(|(x, e)| (*x, e.eval(regs))).collect()
    };
    for p in 0..c.procs.len() {
        if last.phase[p] == Phase::Mid && p != vp {
            let g = c.procs[p].txns[last.pc[p]];
            let writes = eval_writes(g, &last.regs[p]);
            units.push(Unit { proc_idx: p, txn: g, reads: vec![], writes, label: String::new() });
        }
    }
    let cand = path.iter().find(|u| u.label.contains('#')).expect("a violating run has a candidate").clone();
    let writes = eval_writes(cand.txn, &last.regs[cand.proc_idx]);
    units.push(Unit { writes, reads: vec![], label: String::new(), ..cand.clone() });

    // merge the parts of each original transaction; order by the part that writes
    let mut last_writer: Vec<Option<usize>> = vec![None; c.vars.len()];
    let mut merged: BTreeMap<usize, (usize, Committed)> = BTreeMap::new();
    for (i, u) in units.iter().enumerate() {
        let entry = merged.entry(u.txn).or_insert((i, Committed { txn: u.txn, reads: vec![], writes: vec![] }));
        for &(x, v) in &u.reads {
            entry.1.reads.push((x, v, last_writer[x]));
        }
        if !u.writes.is_empty() {
            entry.0 = i;
            entry.1.writes = u.writes.clone();
        }
        for &(x, _) in &u.writes {
            last_writer[x] = Some(u.txn);
        }
    }
    let mut run: Vec<(usize, Committed)> = merged.into_values().collect();
    run.sort_by_key(|(i, _)| *i);
    let run: Vec<Committed> = run.into_iter().map(|(_, c)| c).collect();
    let witness = trace_of(c, &init_tid(c), &run);
    let var_w = last.var_w.map(|x| c.vars[x].clone()).unwrap_or_default();
    MonitorViolation {
        schedule: units.iter().filter(|u| !u.label.is_empty()).map(|u| u.label.clone()).collect(),
        witness,
        candidate: c.txns[cand.txn].tid.clone(),
        var_w,
    }
}

/// Robust iff the instrumented program cannot fail its assertion under serial execution.
/// A violation carries the serial schedule and its projection to a trace of the program.
pub fn check_robust_pcsi_via_monitor(c: &Compiled, budget: Budget) -> Verdict {
    let inst = instrument(c);
    let mut stats = BTreeMap::new();
    let outcome = match explore_monitor(&inst, budget.schedules) {
        Err(e) => Outcome::Unknown(e.to_string()),
        Ok(MonitorOutcome::Unreachable { states }) => {
            stats.insert("monitor_states", states as u64);
            Outcome::Robust
        }
        Ok(MonitorOutcome::Reachable(v)) => {
            let t = &v.witness;
            let cycle = violation_cycle(t, budget.cycles);
            if !member_pc(t) || member_si(t).unwrap_or(true) {
                Outcome::Unknown(format!("monitor witness is not a PC-but-not-SI trace:\n{t}"))
            } else {
                Outcome::Violation(Box::new(Violation {
                    witness: v.witness.clone(),
                    of_split: false,
                    schedule: Some(v.schedule.clone()),
                    cycle,
                }))
            }
        }
    };
    Verdict { from: Model::PC, to: Model::SI, method: Method::Reduction, outcome, stats }
}

/// A happens-before cycle with a ws step followed by cf and no two successive cf steps.
pub(crate) fn violation_cycle(t: &Trace, cap: usize) -> Option<String> {
    let mut found = None;
    let _ = t.hb_graph().for_each_cycle(cap, |cy| {
        if cy.has_ws_then_cf && !cy.has_two_successive_cf {
            found = Some(cy.display(t).to_string());
            std::ops::ControlFlow::Break(())
        } else {
            std::ops::ControlFlow::Continue(())
        }
    });
    found
}

impl Instrumented {
    /// Pseudo-code of the instrumented program, one rewritten block per transaction.
    pub fn to_text(&self) -> String {
        let c = &self.compiled;
        let src = &c.source;
        let mut o = String::new();
        let name = src.name.as_deref().unwrap_or("program");
        let _ = writeln!(o, "// monitor for {name}: PC vs SI");
        let vars: Vec<String> = c.vars.iter().map(|x| format!("hbR[{x}] hbW[{x}]")).collect();
        let _ = writeln!(o, "// shared: done# varW rdSet wrSet {}", vars.join(" "));
        let _ = writeln!(o, "// process-local: hbP rdSet' wrSet'");
        let _ = writeln!(o, "// all auxiliary variables start at ⊥");
        for proc_ in &src.processes {
            let _ = writeln!(o, "process {} regs {}", proc_.pid, proc_.regs.join(" "));
            for t in &proc_.txns {
                let g = c.txn_index(&t.tid).unwrap();
                let sh = shape(c, g);
                let of = |f: fn(&Stmt) -> bool| -> Vec<&Stmt> { t.body.iter().map(|i| &i.stmt).filter(|s| f(s)).collect() };
                let reads = of(|s| matches!(s, Stmt::Read { .. }));
                let tests = of(|s| matches!(s, Stmt::Assume(_) | Stmt::Assert(_)));
                let writes = of(|s| matches!(s, Stmt::Write { .. }));
                let lets = of(|s| matches!(s, Stmt::Let { .. }));
                let mut rpart: Vec<&Stmt> = reads.clone();
                let mut wpart: Vec<&Stmt> = Vec::new();
                if sh.tests_in_read {
                    rpart.extend(&tests);
                } else {
                    wpart.extend(&tests);
                }
                wpart.extend(&writes);
                if sh.has_w {
                    wpart.extend(&lets);
                } else {
                    rpart.extend(&lets);
                }
                let mut b = Block { out: &mut o, depth: 1 };
                b.line(&format!("txn {} {{", t.tid));
                b.depth += 1;
                b.line("if (!done#) {");
                b.depth += 1;
                b.line("if (*) {");
                b.depth += 1;
                if sh.has_r {
                    b.plain(&rpart);
                }
                if sh.has_w {
                    if sh.has_r {
                        b.line("if (!done#) {");
                        b.depth += 1;
                        b.plain(&wpart);
                        b.depth -= 1;
                        b.line("} else {");
                        b.depth += 1;
                        b.tracked(&wpart);
                        b.depth -= 1;
                        b.line("}");
                    } else {
                        b.plain(&wpart);
                    }
                }
                b.depth -= 1;
                b.line("} else {");
                b.depth += 1;
                b.candidate(&reads, &tests, &writes);
                b.depth -= 1;
                b.line("}");
                b.depth -= 1;
                b.line("} else if (*) {");
                b.depth += 1;
                b.line("rdSet' := ∅");
                b.line("wrSet' := ∅");
                if sh.has_r {
                    b.tracked(&rpart);
                }
                if sh.has_w {
                    b.tracked(&wpart);
                }
                b.depth -= 1;
                b.line("}");
                b.depth -= 1;
                b.line("}");
            }
        }
        o
    }
}

struct Block<'a> {
    out: &'a mut String,
    depth: usize,
}

impl Block<'_> {
    fn line(&mut self, s: &str) {
        let _ = writeln!(self.out, "{}{}", "  ".repeat(self.depth), s);
    }

    fn plain(&mut self, part: &[&Stmt]) {
        let body: Vec<String> = part.iter().map(|s| stmt_to_string(s)).collect();
        self.line(&format!("begin {} commit", body.join("; ")));
    }

    fn candidate(&mut self, reads: &[&Stmt], tests: &[&Stmt], writes: &[&Stmt]) {
        self.line("begin");
        self.depth += 1;
        for s in reads {
            if let Stmt::Read { var, .. } = s {
                self.line(&stmt_to_string(s));
                self.line(&format!("hbR['{var}'] := 0"));
                self.line(&format!("rdSet := rdSet ∪ {{'{var}'}}"));
            }
        }
        for s in tests {
            self.line(&stmt_to_string(s));
        }
        for s in writes {
            if let Stmt::Write { var, .. } = s {
                self.line(&format!("if (varW == ⊥ and *) varW := '{var}'"));
            }
        }
        self.line("assume (varW != ⊥)");
        self.line("done# := true");
        self.depth -= 1;
        self.line("commit");
        self.line("assume false");
    }

    fn tracked(&mut self, part: &[&Stmt]) {
        self.line("begin");
        self.depth += 1;
        self.line("hb := ⊥");
        self.line("if (hbP != ⊥ and hbP < 2) hb := 0 else if (hbP == 2) hb := 2");
        for s in part {
            match s {
                Stmt::Read { var, .. } => {
                    self.line(&stmt_to_string(s));
                    self.line(&format!("rdSet' := rdSet' ∪ {{'{var}'}}"));
                    self.hb_via_write(var);
                }
                Stmt::Write { var, expr } => {
                    self.line(&format!("write {var} {}", expr_to_string(expr)));
                    self.line(&format!("wrSet' := wrSet' ∪ {{'{var}'}}"));
                    self.hb_via_write(var);
                    self.line(&format!(
                        "if ('{var}' ∈ rdSet) if (hb == ⊥ or hb > hbR['{var}'] + 1) hb := min(hbR['{var}'] + 1, 2)"
                    ));
                }
                _ => self.line(&stmt_to_string(s)),
            }
        }
        self.line("assume (hb != ⊥)");
        self.line("assert (hb == 2 or varW ∉ wrSet')");
        self.line("if (hbP == ⊥ or hbP > hb) hbP := hb");
        self.line("for each 'x' ∈ wrSet': if (hbW['x'] == ⊥ or hbW['x'] > hb) hbW['x'] := hb");
        self.line("for each 'x' ∈ rdSet': if (hbR['x'] == ⊥ or hbR['x'] > hb) hbR['x'] := hb");
        self.line("rdSet := rdSet ∪ rdSet'");
        self.line("wrSet := wrSet ∪ wrSet'");
        self.depth -= 1;
        self.line("commit");
    }

    fn hb_via_write(&mut self, var: &str) {
        self.line(&format!(
            "if ('{var}' ∈ wrSet) if (hbW['{var}'] != 2) hb := 0 else if (hb == ⊥) hb := hbW['{var}']"
        ));
    }
}
