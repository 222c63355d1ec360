#![allow(dead_code)]

use proptest::prelude::*;
use txrobust::corpus;
use txrobust::lang::{compile, parse, Compiled};
use txrobust::robustness::candidate_traces;
use txrobust::trace::Trace;

pub const VARS: [&str; 2] = ["x", "y"];

#[derive(Clone, Debug)]
pub enum WExpr {
    Const(i64),
    /// A register read earlier in the same process, plus a constant.
    RegPlus(usize, i64),
}

#[derive(Clone, Debug)]
pub struct GenTxn {
    pub reads: Vec<usize>,
    /// Index into this transaction's reads; `assume r == v`.
    pub assume: Option<(usize, i64)>,
    pub writes: Vec<(usize, WExpr)>,
}

fn txn() -> impl Strategy<Value = GenTxn> {
    let reads = prop::sample::subsequence(vec![0usize, 1], 0..=2).prop_shuffle();
    let writes = prop::collection::vec(
        (0usize..2, prop_oneof![(1i64..=2).prop_map(WExpr::Const), (0usize..4, 0i64..=1).prop_map(|(r, c)| WExpr::RegPlus(r, c))]),
        0..=2,
    );
    (reads, prop::option::of((0usize..2, 0i64..=1)), writes).prop_map(|(reads, assume, mut writes)| {
        writes.sort_by_key(|w| w.0);
        writes.dedup_by_key(|w| w.0);
        let assume = assume.filter(|&(i, _)| i < reads.len());
        GenTxn { reads, assume, writes }
    })
}

/// At most two processes with at most two transactions each, over `x` and `y`.
pub fn program_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(txn(), 1..=2), 1..=2).prop_map(|procs| render(&procs))
}

pub fn render(procs: &[Vec<GenTxn>]) -> String {
    let mut s = String::from("program G\n");
    for (p, txns) in procs.iter().enumerate() {
        let mut regs: Vec<String> = Vec::new();
        let mut body = String::new();
        for (t, tx) in txns.iter().enumerate() {
            let mut stmts = Vec::new();
            let mut local = Vec::new();
            for (i, &x) in tx.reads.iter().enumerate() {
                let r = format!("r{p}{t}{i}");
                stmts.push(format!("read {r} {}", VARS[x]));
                local.push(r.clone());
                regs.push(r);
            }
            if let Some((i, v)) = tx.assume {
                stmts.push(format!("assume {} == {v}", local[i]));
            }
            for (x, e) in &tx.writes {
                let e = match e {
                    WExpr::Const(c) => c.to_string(),
                    WExpr::RegPlus(r, c) if !regs.is_empty() => format!("{} + {c}", regs[r % regs.len()]),
                    WExpr::RegPlus(_, c) => (c + 1).to_string(),
                };
                stmts.push(format!("write {} {e}", VARS[*x]));
            }
            body.push_str(&format!("  txn t{p}{t} {{ {} }}\n", stmts.join("; ")));
        }
        s.push_str(&format!("process p{p} regs {}\n{body}", regs.join(" ")));
    }
    s
}

pub fn compiled(src: &str) -> Compiled {
    compile(&parse(src).unwrap_or_else(|e| panic!("{e}\n{src}"))).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Every candidate trace of every corpus program.
pub fn corpus_traces() -> Vec<(String, Trace)> {
    let mut out = Vec::new();
    for e in corpus::all() {
        let c = compiled(e.source);
        for t in candidate_traces(&c, 1_000_000).unwrap() {
            out.push((e.name.to_string(), t));
        }
    }
    out
}

pub fn cases() -> u32 {
    std::env::var("PROPTEST_CASES").ok().and_then(|s| s.parse().ok()).unwrap_or(1000)
}
