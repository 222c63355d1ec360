use super::ast::*;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate identifier `{0}`")]
    Duplicate(String),
    #[error("transaction `{tid}`: undefined label `{label}`")]
    UndefinedLabel { tid: String, label: String },
}

pub const KEYWORDS: &[&str] = &[
    "program", "domain", "vars", "process", "regs", "txn", "unfold", "read", "write", "assume", "assert",
    "let", "goto",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", ";", ":", ",", "(", ")", "?", "*", "+", "-", "!", "<", ">",
];

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

impl Lexer {
    fn run(src: &str) -> Result<Lexer, ParseError> {
        let chars: Vec<char> = src.chars().collect();
        let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
        let mut toks = Vec::new();
        while i < chars.len() {
            let c = chars[i];
            if c == '\n' {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            if c.is_whitespace() {
                i += 1;
                col += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            let (l0, c0) = (line, col);
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                toks.push((Tok::Ident(chars[start..i].iter().collect()), l0, c0));
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                col += i - start;
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<i64>().map_err(|_| ParseError::Syntax {
                    line: l0,
                    col: c0,
                    msg: format!("integer literal `{text}` out of range"),
                })?;
                toks.push((Tok::Int(v), l0, c0));
                continue;
            }
            let sym = SYMBOLS.iter().find(|s| {
                let s: Vec<char> = s.chars().collect();
                chars[i..].starts_with(&s)
            });
            match sym {
                Some(s) => {
                    i += s.len();
                    col += s.len();
                    toks.push((Tok::Sym(s), l0, c0));
                }
                None => {
                    return Err(ParseError::Syntax { line, col, msg: format!("unexpected character `{c}`") });
                }
            }
        }
        toks.push((Tok::Eof, line, col));
        Ok(Lexer { toks })
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (_, line, col) = self.toks[self.pos];
        Err(ParseError::Syntax { line, col, msg: msg.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {t}")),
        }
    }

    fn at_plain_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            t => self.err(format!("expected integer, found {t}")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_kw("program")?;
        let mut prog = Program::default();
        if self.at_plain_ident() {
            prog.name = Some(self.ident()?);
        }
        let mut seen_domain = false;
        loop {
            if self.is_kw("domain") {
                if seen_domain {
                    return self.err("duplicate `domain` declaration");
                }
                seen_domain = true;
                self.bump();
                let mut d = Vec::new();
                while matches!(self.peek(), Tok::Int(_)) || self.is_sym("-") {
                    d.push(self.int()?);
                }
                if d.is_empty() {
                    return self.err("`domain` needs at least one value");
                }
                prog.domain = d;
            } else if self.is_kw("vars") {
                self.bump();
                while self.at_plain_ident() {
                    let v = self.ident()?;
                    if prog.vars.contains(&v) {
                        return Err(ParseError::Duplicate(v));
                    }
                    prog.vars.push(v);
                }
            } else if self.is_kw("process") {
                let p = self.process()?;
                prog.processes.push(p);
            } else if *self.peek() == Tok::Eof {
                break;
            } else {
                return self.err(format!("expected `domain`, `vars`, `process` or end of input, found {}", self.peek()));
            }
        }
        Ok(prog)
    }

    fn process(&mut self) -> PResult<Process> {
        self.expect_kw("process")?;
        let pid = self.ident()?;
        let mut regs = Vec::new();
        if self.is_kw("regs") {
            self.bump();
            while self.at_plain_ident() {
                regs.push(self.ident()?);
            }
        }
        let mut txns = Vec::new();
        while self.is_kw("txn") {
            txns.push(self.txn()?);
        }
        Ok(Process { pid, regs, txns })
    }

    fn txn(&mut self) -> PResult<Transaction> {
        self.expect_kw("txn")?;
        let tid = self.ident()?;
        let mut unfold = None;
        if self.is_kw("unfold") {
            self.bump();
            let k = self.int()?;
            if k < 1 {
                return self.err("unfold bound must be at least 1");
            }
            unfold = Some(k as u32);
        }
        self.expect_sym("{")?;
        let mut body = Vec::new();
        loop {
            if self.is_sym("}") {
                self.bump();
                break;
            }
            body.push(self.instr()?);
            if self.is_sym(";") {
                self.bump();
            } else if !self.is_sym("}") {
                return self.err(format!("expected `;` or `}}`, found {}", self.peek()));
            }
        }
        Ok(Transaction { tid, unfold, body })
    }

    fn instr(&mut self) -> PResult<Instr> {
        let mut label = None;
        if self.at_plain_ident() && matches!(self.peek_at(1), Tok::Sym(":")) {
            label = Some(self.ident()?);
            self.bump();
        }
        let stmt = match self.peek().clone() {
            Tok::Ident(k) if k == "read" => {
                self.bump();
                let reg = self.ident()?;
                let var = self.ident()?;
                Stmt::Read { reg, var }
            }
            Tok::Ident(k) if k == "write" => {
                self.bump();
                let var = self.ident()?;
                let expr = self.expr()?;
                Stmt::Write { var, expr }
            }
            Tok::Ident(k) if k == "assume" => {
                self.bump();
                if self.is_sym("*") {
                    self.bump();
                    Stmt::Assume(Guard::Star)
                } else {
                    Stmt::Assume(Guard::Expr(self.expr()?))
                }
            }
            Tok::Ident(k) if k == "assert" => {
                self.bump();
                Stmt::Assert(self.expr()?)
            }
            Tok::Ident(k) if k == "let" => {
                self.bump();
                let reg = self.ident()?;
                let expr = self.expr()?;
                Stmt::Let { reg, expr }
            }
            Tok::Ident(k) if k == "goto" => {
                self.bump();
                let mut labels = vec![self.ident()?];
                while self.is_sym(",") {
                    self.bump();
                    labels.push(self.ident()?);
                }
                Stmt::Goto(labels)
            }
            t => return self.err(format!("expected statement, found {t}")),
        };
        Ok(Instr { label, stmt })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let c = self.binary(2)?;
        if self.is_sym("?") {
            self.bump();
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(Expr::Cond(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        let s = match self.peek() {
            Tok::Sym(s) => *s,
            _ => return None,
        };
        Some(match s {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.prec() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.prec() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.bump();
            // a literal folds into a negative constant
            if let Tok::Int(v) = self.peek().clone() {
                self.bump();
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) if self.at_plain_ident() => Ok(Expr::Reg(self.ident()?)),
            t => self.err(format!("expected expression, found {t}")),
        }
    }
}

/// Parses program text. Identifier uniqueness and label resolution are checked here;
/// the remaining well-formedness rules are reported by [`super::well_formed`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let lex = Lexer::run(src)?;
    let mut p = Parser { toks: lex.toks, pos: 0 };
    let prog = p.program()?;
    let mut pids = Vec::new();
    let mut tids = Vec::new();
    for proc_ in &prog.processes {
        if pids.contains(&&proc_.pid) {
            return Err(ParseError::Duplicate(proc_.pid.clone()));
        }
        pids.push(&proc_.pid);
        for t in &proc_.txns {
            if tids.contains(&&t.tid) {
                return Err(ParseError::Duplicate(t.tid.clone()));
            }
            tids.push(&t.tid);
            for ins in &t.body {
                if let Stmt::Goto(ls) = &ins.stmt {
                    for l in ls {
                        if !t.body.iter().any(|i| i.label.as_ref() == Some(l)) {
                            return Err(ParseError::UndefinedLabel { tid: t.tid.clone(), label: l.clone() });
                        }
                    }
                }
            }
        }
    }
    Ok(prog)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let lex = Lexer::run(src)?;
    let mut p = Parser { toks: lex.toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("trailing input {}", p.peek()));
    }
    Ok(e)
}
