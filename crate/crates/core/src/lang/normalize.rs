//! Rewrites transactions into reads / tests / writes / register-bindings form.
//!
//! Each control-flow path is executed symbolically. Reads of a variable already written
//! by the transaction resolve through the transaction log, repeated reads collapse onto
//! the first one, and repeated writes keep only the last value.

use super::ast::*;
use super::check::{has_cycle, successors};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("transaction `{0}` loops without an unfold bound")]
    UnboundedLoop(String),
    #[error("transaction `{0}` has no complete path within its unfold bound")]
    NoPath(String),
    #[error("transaction `{0}`: branches access different variables or registers; split it into separate transactions")]
    DivergentBranches(String),
    #[error("transaction `{0}`: branches guarded by `assume *` or containing asserts cannot be merged")]
    NondeterministicBranches(String),
    #[error("transaction `{0}`: cyclic register bindings")]
    CyclicBindings(String),
}

/// Placeholder for the value returned by the i-th distinct read of a path.
fn read_slot(i: usize) -> String {
    format!("#{i}")
}

#[derive(Clone, Debug)]
enum Test {
    Assume(Guard),
    Assert(Expr),
}

#[derive(Clone, Debug)]
struct Path {
    /// (source register, variable) for each distinct variable read from the store.
    reads: Vec<(String, String)>,
    tests: Vec<Test>,
    writes: Vec<(String, Expr)>,
    /// Final symbolic value of every register the path assigned.
    finals: BTreeMap<String, Expr>,
}

#[derive(Default, Clone)]
struct SymState {
    env: BTreeMap<String, Expr>,
    log: BTreeMap<String, Expr>,
    read_of: BTreeMap<String, usize>,
}

fn sym(env: &BTreeMap<String, Expr>, e: &Expr) -> Expr {
    e.subst(env)
}

fn run_paths(t: &Transaction) -> Vec<Path> {
    let bound = t.unfold.unwrap_or(1) as usize;
    let mut out = Vec::new();
    let mut visits = vec![0usize; t.body.len()];
    let mut st = Path { reads: Vec::new(), tests: Vec::new(), writes: Vec::new(), finals: BTreeMap::new() };
    let mut ss = SymState::default();
    explore(t, 0, bound, &mut visits, &mut st, &mut ss, &mut out);
    out
}

fn explore(
    t: &Transaction,
    pc: usize,
    bound: usize,
    visits: &mut Vec<usize>,
    p: &mut Path,
    ss: &mut SymState,
    out: &mut Vec<Path>,
) {
    if pc >= t.body.len() {
        let mut done = p.clone();
        done.finals = ss.env.clone();
        out.push(done);
        return;
    }
    if visits[pc] >= bound {
        // exceeding the unfold bound blocks this path
        return;
    }
    visits[pc] += 1;
    let saved_p = p.clone();
    let saved_ss = ss.clone();
    let mut next = vec![pc + 1];
    match &t.body[pc].stmt {
        Stmt::Read { reg, var } => {
            let v = if let Some(e) = ss.log.get(var) {
                e.clone()
            } else if let Some(&i) = ss.read_of.get(var) {
                Expr::Reg(read_slot(i))
            } else {
                let i = p.reads.len();
                p.reads.push((reg.clone(), var.clone()));
                ss.read_of.insert(var.clone(), i);
                Expr::Reg(read_slot(i))
            };
            ss.env.insert(reg.clone(), v);
        }
        Stmt::Write { var, expr } => {
            let v = sym(&ss.env, expr);
            ss.log.insert(var.clone(), v.clone());
            match p.writes.iter_mut().find(|(x, _)| x == var) {
                Some(w) => w.1 = v,
                None => p.writes.push((var.clone(), v)),
            }
        }
        Stmt::Assume(Guard::Star) => p.tests.push(Test::Assume(Guard::Star)),
        Stmt::Assume(Guard::Expr(e)) => p.tests.push(Test::Assume(Guard::Expr(sym(&ss.env, e)))),
        Stmt::Assert(e) => p.tests.push(Test::Assert(sym(&ss.env, e))),
        Stmt::Let { reg, expr } => {
            let v = sym(&ss.env, expr);
            ss.env.insert(reg.clone(), v);
        }
        Stmt::Goto(_) => next = successors(t, pc),
    }
    for n in next {
        let (bp, bs) = (p.clone(), ss.clone());
        explore(t, n, bound, visits, p, ss, out);
        *p = bp;
        *ss = bs;
    }
    *p = saved_p;
    *ss = saved_ss;
    visits[pc] -= 1;
}

fn conj(tests: &[Test]) -> Expr {
    let mut acc: Option<Expr> = None;
    for tst in tests {
        if let Test::Assume(Guard::Expr(e)) = tst {
            acc = Some(match acc {
                None => e.clone(),
                Some(a) => Expr::bin(BinOp::And, a, e.clone()),
            });
        }
    }
    acc.unwrap_or(Expr::Int(1))
}

fn merge(tid: &str, mut paths: Vec<Path>) -> Result<Path, NormalizeError> {
    if paths.len() == 1 {
        return Ok(paths.pop().unwrap());
    }
    let first = &paths[0];
    let shape = |p: &Path| {
        (
            p.reads.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>(),
            p.writes.iter().map(|(v, _)| v.clone()).collect::<Vec<_>>(),
            p.finals.keys().cloned().collect::<Vec<_>>(),
        )
    };
    let s0 = shape(first);
    if paths.iter().any(|p| shape(p) != s0) {
        return Err(NormalizeError::DivergentBranches(tid.to_string()));
    }
    if paths.iter().any(|p| p.tests.iter().any(|t| matches!(t, Test::Assert(_) | Test::Assume(Guard::Star)))) {
        return Err(NormalizeError::NondeterministicBranches(tid.to_string()));
    }
    let conds: Vec<Expr> = paths.iter().map(|p| conj(&p.tests)).collect();
    let pick = |get: &dyn Fn(&Path) -> Expr| -> Expr {
        let n = paths.len();
        let mut acc = get(&paths[n - 1]);
        for i in (0..n - 1).rev() {
            let e = get(&paths[i]);
            if e != acc {
                acc = Expr::Cond(Box::new(conds[i].clone()), Box::new(e), Box::new(acc));
            }
        }
        acc
    };
    let mut any = conds[0].clone();
    for c in &conds[1..] {
        any = Expr::bin(BinOp::Or, any, c.clone());
    }
    let writes =
        first.writes.iter().enumerate().map(|(i, (v, _))| (v.clone(), pick(&|p: &Path| p.writes[i].1.clone()))).collect();
    let finals = first.finals.keys().map(|r| (r.clone(), pick(&|p: &Path| p.finals[r].clone()))).collect();
    Ok(Path { reads: first.reads.clone(), tests: vec![Test::Assume(Guard::Expr(any))], writes, finals })
}

/// Normalizes one transaction. `regs` is the owning process's register list; fresh
/// registers introduced to avoid clobbering are appended to it.
pub fn normalize_txn(t: &Transaction, regs: &mut Vec<String>) -> Result<Transaction, NormalizeError> {
    if t.unfold.is_none() && has_cycle(t) {
        return Err(NormalizeError::UnboundedLoop(t.tid.clone()));
    }
    let paths = run_paths(t);
    if paths.is_empty() {
        return Err(NormalizeError::NoPath(t.tid.clone()));
    }
    let path = merge(&t.tid, paths)?;

    // Registers assigned by the transaction but not declared become process registers.
    for r in path.finals.keys() {
        if !r.starts_with('#') && !regs.contains(r) {
            regs.push(r.clone());
        }
    }

    let mut exprs: Vec<&Expr> = Vec::new();
    for tst in &path.tests {
        match tst {
            Test::Assume(Guard::Expr(e)) | Test::Assert(e) => exprs.push(e),
            Test::Assume(Guard::Star) => {}
        }
    }
    exprs.extend(path.writes.iter().map(|(_, e)| e));
    exprs.extend(path.finals.values());
    let pre_used = |r: &str| exprs.iter().any(|e| e.mentions(r));

    let mut targets: Vec<String> = Vec::new();
    let mut slot_map = BTreeMap::new();
    for (i, (src, _)) in path.reads.iter().enumerate() {
        let target = if !targets.contains(src) && !pre_used(src) {
            src.clone()
        } else {
            let mut k = 1;
            loop {
                let cand = format!("{src}_{k}");
                if !regs.contains(&cand) && !targets.contains(&cand) {
                    break cand;
                }
                k += 1;
            }
        };
        if !regs.contains(&target) {
            regs.push(target.clone());
        }
        slot_map.insert(read_slot(i), Expr::Reg(target.clone()));
        targets.push(target);
    }

    let mut body = Vec::new();
    for ((_, var), reg) in path.reads.iter().zip(&targets) {
        body.push(Instr::new(Stmt::Read { reg: reg.clone(), var: var.clone() }));
    }
    for tst in &path.tests {
        body.push(Instr::new(match tst {
            Test::Assume(Guard::Star) => Stmt::Assume(Guard::Star),
            Test::Assume(Guard::Expr(e)) => Stmt::Assume(Guard::Expr(e.subst(&slot_map))),
            Test::Assert(e) => Stmt::Assert(e.subst(&slot_map)),
        }));
    }
    for (var, e) in &path.writes {
        body.push(Instr::new(Stmt::Write { var: var.clone(), expr: e.subst(&slot_map) }));
    }

    // Bindings are simultaneous; order them so none reads a register bound before it.
    let mut binds: Vec<(String, Expr)> = path
        .finals
        .iter()
        .map(|(r, e)| (r.clone(), e.subst(&slot_map)))
        .filter(|(r, e)| *e != Expr::Reg(r.clone()))
        .collect();
    let mut ordered = Vec::new();
    while !binds.is_empty() {
        // a binding may run once no other pending binding still needs the old value
        let pos = binds
            .iter()
            .position(|(r, _)| binds.iter().all(|(r2, e2)| r2 == r || !e2.mentions(r)))
            .ok_or_else(|| NormalizeError::CyclicBindings(t.tid.clone()))?;
        ordered.push(binds.remove(pos));
    }
    for (reg, expr) in ordered {
        body.push(Instr::new(Stmt::Let { reg, expr }));
    }
    Ok(Transaction { tid: t.tid.clone(), unfold: None, body })
}

pub fn normalize(p: &Program) -> Result<Program, NormalizeError> {
    let mut out = p.clone();
    out.vars = p.all_vars();
    for proc_ in &mut out.processes {
        let mut regs = proc_.regs.clone();
        let mut txns = Vec::new();
        for t in &proc_.txns {
            txns.push(normalize_txn(t, &mut regs)?);
        }
        proc_.regs = regs;
        proc_.txns = txns;
    }
    Ok(out)
}
