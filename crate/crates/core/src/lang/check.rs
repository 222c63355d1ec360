use super::ast::*;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    DuplicateProcessId(String),
    DuplicateTransactionId(String),
    DuplicateVariable(String),
    DuplicateRegister { pid: String, reg: String },
    UndefinedLabel { tid: String, label: String },
    UndeclaredRegister { tid: String, reg: String },
    RegisterVariableClash(String),
    EmptyDomain,
    DomainWithoutZero,
    /// Goto cycle without an `unfold` bound.
    UnboundedLoop(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateProcessId(p) => write!(f, "duplicate process id `{p}`"),
            Diagnostic::DuplicateTransactionId(t) => write!(f, "duplicate transaction id `{t}`"),
            Diagnostic::DuplicateVariable(v) => write!(f, "variable `{v}` declared twice"),
            Diagnostic::DuplicateRegister { pid, reg } => write!(f, "process `{pid}`: register `{reg}` declared twice"),
            Diagnostic::UndefinedLabel { tid, label } => write!(f, "transaction `{tid}`: undefined label `{label}`"),
            Diagnostic::UndeclaredRegister { tid, reg } => {
                write!(f, "transaction `{tid}`: register `{reg}` is used before assignment and not declared")
            }
            Diagnostic::RegisterVariableClash(n) => write!(f, "`{n}` is used both as a register and a shared variable"),
            Diagnostic::EmptyDomain => write!(f, "value domain is empty"),
            Diagnostic::DomainWithoutZero => write!(f, "value domain must contain the initial value 0"),
            Diagnostic::UnboundedLoop(t) => write!(f, "transaction `{t}` loops without an unfold bound"),
        }
    }
}

/// Lists every violated program invariant. Empty iff the program is well formed.
pub fn well_formed(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.domain.is_empty() {
        out.push(Diagnostic::EmptyDomain);
    } else if !p.domain.contains(&0) {
        out.push(Diagnostic::DomainWithoutZero);
    }
    let mut seen = BTreeSet::new();
    for v in &p.vars {
        if !seen.insert(v) {
            out.push(Diagnostic::DuplicateVariable(v.clone()));
        }
    }
    let vars: BTreeSet<String> = p.all_vars().into_iter().collect();
    let mut pids = BTreeSet::new();
    let mut tids = BTreeSet::new();
    for proc_ in &p.processes {
        if !pids.insert(&proc_.pid) {
            out.push(Diagnostic::DuplicateProcessId(proc_.pid.clone()));
        }
        let mut regs = BTreeSet::new();
        for r in &proc_.regs {
            if !regs.insert(r.as_str()) {
                out.push(Diagnostic::DuplicateRegister { pid: proc_.pid.clone(), reg: r.clone() });
            }
            if vars.contains(r) {
                out.push(Diagnostic::RegisterVariableClash(r.clone()));
            }
        }
        for t in &proc_.txns {
            if !tids.insert(&t.tid) {
                out.push(Diagnostic::DuplicateTransactionId(t.tid.clone()));
            }
            let mut undeclared = BTreeSet::new();
            let mut assigned: BTreeSet<&str> = BTreeSet::new();
            for ins in &t.body {
                let mut note = |r: &str| {
                    if !regs.contains(r) && !assigned.contains(r) {
                        undeclared.insert(r.to_string());
                    }
                };
                match &ins.stmt {
                    Stmt::Read { .. } => {}
                    Stmt::Let { expr, .. } => expr.visit_regs(&mut note),
                    Stmt::Write { expr, .. } | Stmt::Assert(expr) | Stmt::Assume(Guard::Expr(expr)) => {
                        expr.visit_regs(&mut note)
                    }
                    Stmt::Assume(Guard::Star) => {}
                    Stmt::Goto(ls) => {
                        for l in ls {
                            if !t.body.iter().any(|i| i.label.as_ref() == Some(l)) {
                                out.push(Diagnostic::UndefinedLabel { tid: t.tid.clone(), label: l.clone() });
                            }
                        }
                    }
                }
                match &ins.stmt {
                    Stmt::Read { reg, .. } | Stmt::Let { reg, .. } => {
                        assigned.insert(reg);
                    }
                    _ => {}
                }
            }
            for reg in undeclared {
                out.push(Diagnostic::UndeclaredRegister { tid: t.tid.clone(), reg });
            }
            if t.unfold.is_none() && has_cycle(t) {
                out.push(Diagnostic::UnboundedLoop(t.tid.clone()));
            }
        }
    }
    out
}

/// Control-flow successors of instruction `i`; `body.len()` is the exit.
pub(crate) fn successors(t: &Transaction, i: usize) -> Vec<usize> {
    match &t.body[i].stmt {
        Stmt::Goto(ls) => {
            let mut v: Vec<usize> = t
                .body
                .iter()
                .enumerate()
                .filter(|(_, ins)| ins.label.as_ref().is_some_and(|l| ls.contains(l)))
                .map(|(j, _)| j)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        }
        _ => vec![i + 1],
    }
}

pub(crate) fn has_cycle(t: &Transaction) -> bool {
    let n = t.body.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    fn dfs(t: &Transaction, i: usize, state: &mut [u8]) -> bool {
        state[i] = 1;
        for j in successors(t, i) {
            if j >= state.len() {
                continue;
            }
            if state[j] == 1 || (state[j] == 0 && dfs(t, j, state)) {
                return true;
            }
        }
        state[i] = 2;
        false
    }
    (0..n).any(|i| state[i] == 0 && dfs(t, i, &mut state))
}
