//! Index-based form of a normalized program used by the executors.

use super::ast::*;
use super::normalize::{normalize, NormalizeError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CExpr {
    Int(Value),
    Reg(usize),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
    Cond(Box<CExpr>, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    pub fn eval(&self, regs: &[Value]) -> Value {
        match self {
            CExpr::Int(v) => *v,
            CExpr::Reg(i) => regs[*i],
            CExpr::Unary(UnOp::Neg, e) => e.eval(regs).wrapping_neg(),
            CExpr::Unary(UnOp::Not, e) => (e.eval(regs) == 0) as Value,
            CExpr::Binary(op, a, b) => op.apply(a.eval(regs), b.eval(regs)),
            CExpr::Cond(c, a, b) => {
                if c.eval(regs) != 0 {
                    a.eval(regs)
                } else {
                    b.eval(regs)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CTest {
    /// `None` is `assume *`.
    Assume(Option<CExpr>),
    Assert(CExpr),
}

#[derive(Clone, Debug)]
pub struct CTxn {
    pub tid: String,
    pub proc_idx: usize,
    /// (register, variable)
    pub reads: Vec<(usize, usize)>,
    pub tests: Vec<CTest>,
    pub writes: Vec<(usize, CExpr)>,
    pub lets: Vec<(usize, CExpr)>,
}

impl CTxn {
    pub fn reads_var(&self, x: usize) -> bool {
        self.reads.iter().any(|&(_, v)| v == x)
    }

    pub fn writes_var(&self, x: usize) -> bool {
        self.writes.iter().any(|(v, _)| *v == x)
    }

    /// Evaluates assumes, writes and lets against `regs`, whose read registers are
    /// already loaded. Returns the written values, or `None` if an assume fails.
    /// `assume *` passes: blocking never produces a trace the passing branch lacks.
    pub fn finish(&self, regs: &mut [Value]) -> Option<Vec<(usize, Value)>> {
        for t in &self.tests {
            if let CTest::Assume(Some(e)) = t {
                if e.eval(regs) == 0 {
                    return None;
                }
            }
        }
        let out = self.writes.iter().map(|(x, e)| (*x, e.eval(regs))).collect();
        let vals: Vec<Value> = self.lets.iter().map(|(_, e)| e.eval(regs)).collect();
        for ((r, _), v) in self.lets.iter().zip(vals) {
            regs[*r] = v;
        }
        Some(out)
    }

    /// True if some assert fails on the current registers.
    pub fn assert_fails(&self, regs: &[Value]) -> bool {
        self.tests.iter().any(|t| matches!(t, CTest::Assert(e) if e.eval(regs) == 0))
    }
}

#[derive(Clone, Debug)]
pub struct CProc {
    pub pid: String,
    pub regs: Vec<String>,
    /// Global transaction indices in program order.
    pub txns: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub source: Program,
    pub vars: Vec<String>,
    pub domain: Vec<Value>,
    pub procs: Vec<CProc>,
    pub txns: Vec<CTxn>,
}

fn cexpr(e: &Expr, regs: &mut Vec<String>) -> CExpr {
    match e {
        Expr::Int(v) => CExpr::Int(*v),
        Expr::Reg(r) => CExpr::Reg(reg_index(regs, r)),
        Expr::Unary(op, a) => CExpr::Unary(*op, Box::new(cexpr(a, regs))),
        Expr::Binary(op, a, b) => CExpr::Binary(*op, Box::new(cexpr(a, regs)), Box::new(cexpr(b, regs))),
        Expr::Cond(c, a, b) => {
            CExpr::Cond(Box::new(cexpr(c, regs)), Box::new(cexpr(a, regs)), Box::new(cexpr(b, regs)))
        }
    }
}

fn reg_index(regs: &mut Vec<String>, r: &str) -> usize {
    match regs.iter().position(|x| x == r) {
        Some(i) => i,
        None => {
            regs.push(r.to_string());
            regs.len() - 1
        }
    }
}

/// Normalizes `p` and lowers it to the index-based form.
pub fn compile(p: &Program) -> Result<Compiled, NormalizeError> {
    let n = normalize(p)?;
    let vars = n.vars.clone();
    let var_idx = |v: &str| vars.iter().position(|x| x == v).expect("normalize lists every variable");
    let mut procs = Vec::new();
    let mut txns = Vec::new();
    for (pi, proc_) in n.processes.iter().enumerate() {
        let mut regs = proc_.regs.clone();
        let mut ids = Vec::new();
        for t in &proc_.txns {
            let mut ct = CTxn {
                tid: t.tid.clone(),
                proc_idx: pi,
                reads: Vec::new(),
                tests: Vec::new(),
                writes: Vec::new(),
                lets: Vec::new(),
            };
            for ins in &t.body {
                match &ins.stmt {
                    Stmt::Read { reg, var } => ct.reads.push((reg_index(&mut regs, reg), var_idx(var))),
                    Stmt::Assume(Guard::Star) => ct.tests.push(CTest::Assume(None)),
                    Stmt::Assume(Guard::Expr(e)) => ct.tests.push(CTest::Assume(Some(cexpr(e, &mut regs)))),
                    Stmt::Assert(e) => ct.tests.push(CTest::Assert(cexpr(e, &mut regs))),
                    Stmt::Write { var, expr } => ct.writes.push((var_idx(var), cexpr(expr, &mut regs))),
                    Stmt::Let { reg, expr } => {
                        let e = cexpr(expr, &mut regs);
                        ct.lets.push((reg_index(&mut regs, reg), e));
                    }
                    Stmt::Goto(_) => unreachable!("normalized transactions have no gotos"),
                }
            }
            ids.push(txns.len());
            txns.push(ct);
        }
        procs.push(CProc { pid: proc_.pid.clone(), regs, txns: ids });
    }
    Ok(Compiled { source: n, vars, domain: p.domain.clone(), procs, txns })
}

impl Compiled {
    pub fn txn_index(&self, tid: &str) -> Option<usize> {
        self.txns.iter().position(|t| t.tid == tid)
    }

    pub fn var_index(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    /// Position of a transaction within its process.
    pub fn po_pos(&self, t: usize) -> usize {
        let p = &self.procs[self.txns[t].proc_idx];
        p.txns.iter().position(|&x| x == t).unwrap()
    }
}
