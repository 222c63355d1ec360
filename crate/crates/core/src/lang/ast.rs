use std::collections::BTreeMap;

pub type Value = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are left-associative.
    pub fn prec(self) -> u8 {
        match self {
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul => 7,
        }
    }

    pub fn apply(self, a: Value, b: Value) -> Value {
        match self {
            BinOp::Or => ((a != 0) || (b != 0)) as Value,
            BinOp::And => ((a != 0) && (b != 0)) as Value,
            BinOp::Eq => (a == b) as Value,
            BinOp::Ne => (a != b) as Value,
            BinOp::Lt => (a < b) as Value,
            BinOp::Le => (a <= b) as Value,
            BinOp::Gt => (a > b) as Value,
            BinOp::Ge => (a >= b) as Value,
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
        }
    }
}

/// Register expression. Booleans are integers; any non-zero value is true.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(Value),
    Reg(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn reg(name: &str) -> Expr {
        Expr::Reg(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn visit_regs<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Int(_) => {}
            Expr::Reg(r) => f(r),
            Expr::Unary(_, e) => e.visit_regs(f),
            Expr::Binary(_, a, b) => {
                a.visit_regs(f);
                b.visit_regs(f);
            }
            Expr::Cond(c, a, b) => {
                c.visit_regs(f);
                a.visit_regs(f);
                b.visit_regs(f);
            }
        }
    }

    pub fn mentions(&self, reg: &str) -> bool {
        let mut found = false;
        self.visit_regs(&mut |r| found |= r == reg);
        found
    }

    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Int(v) => Expr::Int(*v),
            Expr::Reg(r) => map.get(r).cloned().unwrap_or_else(|| Expr::Reg(r.clone())),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.subst(map))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.subst(map)), Box::new(b.subst(map))),
            Expr::Cond(c, a, b) => Expr::Cond(
                Box::new(c.subst(map)),
                Box::new(a.subst(map)),
                Box::new(b.subst(map)),
            ),
        }
    }

    pub fn eval(&self, lookup: &impl Fn(&str) -> Value) -> Value {
        match self {
            Expr::Int(v) => *v,
            Expr::Reg(r) => lookup(r),
            Expr::Unary(UnOp::Neg, e) => e.eval(lookup).wrapping_neg(),
            Expr::Unary(UnOp::Not, e) => (e.eval(lookup) == 0) as Value,
            Expr::Binary(op, a, b) => op.apply(a.eval(lookup), b.eval(lookup)),
            Expr::Cond(c, a, b) => {
                if c.eval(lookup) != 0 {
                    a.eval(lookup)
                } else {
                    b.eval(lookup)
                }
            }
        }
    }
}

/// Condition of an `assume`: an expression, or the nondeterministic choice `*`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    Star,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Read { reg: String, var: String },
    Write { var: String, expr: Expr },
    Assume(Guard),
    /// Only meaningful for instrumented programs; ignored when building traces.
    Assert(Expr),
    /// Register-local assignment. Produced by normalization for values obtained
    /// through the transaction log or collapsed re-reads.
    Let { reg: String, expr: Expr },
    Goto(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instr {
    pub label: Option<String>,
    pub stmt: Stmt,
}

impl Instr {
    pub fn new(stmt: Stmt) -> Instr {
        Instr { label: None, stmt }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub tid: String,
    /// Maximum number of visits of any instruction on one path; required when
    /// the goto structure has a cycle.
    pub unfold: Option<u32>,
    pub body: Vec<Instr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Process {
    pub pid: String,
    pub regs: Vec<String>,
    pub txns: Vec<Transaction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub name: Option<String>,
    pub domain: Vec<Value>,
    pub vars: Vec<String>,
    pub processes: Vec<Process>,
}

pub const DEFAULT_DOMAIN: [Value; 2] = [0, 1];

impl Default for Program {
    fn default() -> Self {
        Program { name: None, domain: DEFAULT_DOMAIN.to_vec(), vars: Vec::new(), processes: Vec::new() }
    }
}

/// Section of a normalized transaction body an instruction belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Read,
    Test,
    Write,
    Let,
}

impl Transaction {
    /// Reads, then assumes/asserts, then writes, then register bindings; no labels or gotos;
    /// every variable read at most once and written at most once.
    pub fn is_normal(&self) -> bool {
        let mut phase = Phase::Read;
        let mut read = Vec::new();
        let mut written = Vec::new();
        for ins in &self.body {
            if ins.label.is_some() {
                return false;
            }
            let p = match &ins.stmt {
                Stmt::Read { var, .. } => {
                    if read.contains(&var) {
                        return false;
                    }
                    read.push(var);
                    Phase::Read
                }
                Stmt::Assume(_) | Stmt::Assert(_) => Phase::Test,
                Stmt::Write { var, .. } => {
                    if written.contains(&var) {
                        return false;
                    }
                    written.push(var);
                    Phase::Write
                }
                Stmt::Let { .. } => Phase::Let,
                Stmt::Goto(_) => return false,
            };
            if p < phase {
                return false;
            }
            phase = p;
        }
        true
    }

    pub fn reads(&self) -> impl Iterator<Item = (&str, &str)> {
        self.body.iter().filter_map(|i| match &i.stmt {
            Stmt::Read { reg, var } => Some((reg.as_str(), var.as_str())),
            _ => None,
        })
    }

    pub fn writes(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.body.iter().filter_map(|i| match &i.stmt {
            Stmt::Write { var, expr } => Some((var.as_str(), expr)),
            _ => None,
        })
    }

    pub fn assumes(&self) -> impl Iterator<Item = &Guard> {
        self.body.iter().filter_map(|i| match &i.stmt {
            Stmt::Assume(g) => Some(g),
            _ => None,
        })
    }

    pub fn has_reads(&self) -> bool {
        self.reads().next().is_some()
    }

    pub fn has_writes(&self) -> bool {
        self.writes().next().is_some()
    }
}

impl Program {
    pub fn is_normal(&self) -> bool {
        self.processes.iter().all(|p| p.txns.iter().all(Transaction::is_normal))
    }

    pub fn transactions(&self) -> impl Iterator<Item = (&Process, &Transaction)> {
        self.processes.iter().flat_map(|p| p.txns.iter().map(move |t| (p, t)))
    }

    pub fn txn_count(&self) -> usize {
        self.processes.iter().map(|p| p.txns.len()).sum()
    }

    /// Variables in declaration order followed by any others in order of first use.
    pub fn all_vars(&self) -> Vec<String> {
        let mut out = self.vars.clone();
        for (_, t) in self.transactions() {
            for ins in &t.body {
                let v = match &ins.stmt {
                    Stmt::Read { var, .. } | Stmt::Write { var, .. } => var,
                    _ => continue,
                };
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}
