use super::ast::*;
use std::fmt::Write as _;

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

// `ctx` is the minimum precedence the surrounding position accepts without parentheses;
// 1 stands for the ternary operator.
fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match e {
        Expr::Int(v) => {
            if *v < 0 && ctx > 1 {
                let _ = write!(out, "({v})");
            } else {
                let _ = write!(out, "{v}");
            }
        }
        Expr::Reg(r) => out.push_str(r),
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            let atomic = matches!(**inner, Expr::Reg(_) | Expr::Unary(..))
                || matches!(**inner, Expr::Int(v) if v >= 0 && *op == UnOp::Not);
            if atomic {
                write_expr(out, inner, 8);
            } else {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.prec();
            let paren = p < ctx;
            if paren {
                out.push('(');
            }
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
            if paren {
                out.push(')');
            }
        }
        Expr::Cond(c, a, b) => {
            let paren = ctx > 1;
            if paren {
                out.push('(');
            }
            write_expr(out, c, 2);
            out.push_str(" ? ");
            write_expr(out, a, 0);
            out.push_str(" : ");
            write_expr(out, b, 0);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn stmt_to_string(s: &Stmt) -> String {
    match s {
        Stmt::Read { reg, var } => format!("read {reg} {var}"),
        Stmt::Write { var, expr } => format!("write {var} {}", expr_to_string(expr)),
        Stmt::Assume(Guard::Star) => "assume *".to_string(),
        Stmt::Assume(Guard::Expr(e)) => format!("assume {}", expr_to_string(e)),
        Stmt::Assert(e) => format!("assert {}", expr_to_string(e)),
        Stmt::Let { reg, expr } => format!("let {reg} {}", expr_to_string(expr)),
        Stmt::Goto(ls) => format!("goto {}", ls.join(", ")),
    }
}

pub fn txn_to_string(t: &Transaction) -> String {
    let mut s = format!("txn {}", t.tid);
    if let Some(k) = t.unfold {
        let _ = write!(s, " unfold {k}");
    }
    if t.body.is_empty() {
        s.push_str(" { }");
        return s;
    }
    s.push_str(" { ");
    let parts: Vec<String> = t
        .body
        .iter()
        .map(|i| match &i.label {
            Some(l) => format!("{l}: {}", stmt_to_string(&i.stmt)),
            None => stmt_to_string(&i.stmt),
        })
        .collect();
    s.push_str(&parts.join("; "));
    s.push_str(" }");
    s
}

/// Canonical program text. `parse(&print(p)) == p` for every parsed program.
pub fn print(p: &Program) -> String {
    let mut s = String::from("program");
    if let Some(n) = &p.name {
        s.push(' ');
        s.push_str(n);
    }
    s.push('\n');
    if p.domain != DEFAULT_DOMAIN {
        let d: Vec<String> = p.domain.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "domain {}", d.join(" "));
    }
    if !p.vars.is_empty() {
        let _ = writeln!(s, "vars {}", p.vars.join(" "));
    }
    for proc_ in &p.processes {
        s.push_str("process ");
        s.push_str(&proc_.pid);
        s.push_str(" regs");
        for r in &proc_.regs {
            s.push(' ');
            s.push_str(r);
        }
        s.push('\n');
        for t in &proc_.txns {
            let _ = writeln!(s, "  {}", txn_to_string(t));
        }
    }
    s
}
