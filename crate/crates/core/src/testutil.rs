//! Compact trace literals for unit tests.
//!
//! One item per line: `txn <tid> <process> [r:<var>:<val> | w:<var>:<val>]*`,
//! `rf <from> <to> <var>`, or `ws <var> <tid>*` (store-order chain after init).
//! The init transaction `T0` writes 0 to every variable mentioned.

use crate::lang::{compile, parse, Compiled};
use crate::trace::{Dep, Event, Trace};

pub fn tr(src: &str) -> Trace {
    let mut vars: Vec<String> = Vec::new();
    let lines: Vec<Vec<&str>> =
        src.lines().map(|l| l.split_whitespace().collect::<Vec<_>>()).filter(|l| !l.is_empty()).collect();
    for l in &lines {
        if l[0] == "txn" {
            for e in &l[3..] {
                let x = e.split(':').nth(1).unwrap().to_string();
                if !vars.contains(&x) {
                    vars.push(x);
                }
            }
        }
    }
    let mut t = Trace::with_init("T0", &vars, 0);
    for l in &lines {
        if l[0] == "txn" {
            let ev = l[3..]
                .iter()
                .map(|e| {
                    let p: Vec<&str> = e.split(':').collect();
                    let v = p[2].parse().unwrap();
                    if p[0] == "r" {
                        Event::read(p[1], v)
                    } else {
                        Event::write(p[1], v)
                    }
                })
                .collect();
            t.push(l[1], l[2], ev);
        }
    }
    t.po_from_processes();
    for l in &lines {
        let ix = |s: &str| t.index_of(s).unwrap_or_else(|| panic!("unknown {s}"));
        match l[0] {
            "rf" => {
                let d = Dep::new(ix(l[1]), ix(l[2]), l[3]);
                t.rf.push(d);
            }
            "ws" => {
                let mut chain = vec![0];
                chain.extend(l[2..].iter().map(|s| ix(s)));
                t.set_ws_chain(l[1], &chain);
            }
            _ => {}
        }
    }
    // variables without an explicit chain: init, then writers in index order
    for x in &vars {
        if !t.ws.iter().any(|d| &d.var == x) {
            let chain: Vec<usize> = (0..t.n()).filter(|&i| t.writes_var(i, x)).collect();
            t.set_ws_chain(x, &chain);
        }
    }
    t.rf.sort();
    t.validate().unwrap();
    t
}

pub fn prog(src: &str) -> Compiled {
    compile(&parse(src).unwrap()).unwrap()
}

pub const SB: &str = include_str!("../corpus/sb.txn");
pub const LU: &str = include_str!("../corpus/lu.txn");
pub const WS: &str = include_str!("../corpus/ws.txn");
pub const MP: &str = include_str!("../corpus/mp.txn");

/// Both reads return 0.
pub fn sb_violation() -> Trace {
    tr("txn t1 p1 w:x:1
        txn t2 p1 r:y:0
        txn t3 p2 w:y:1
        txn t4 p2 r:x:0
        rf T0 t2 y
        rf T0 t4 x")
}

/// Both increments read 0; t1 is stored first.
pub fn lu_violation() -> Trace {
    tr("txn t1 p1 r:x:0 w:x:1
        txn t2 p2 r:x:0 w:x:1
        rf T0 t1 x
        rf T0 t2 x
        ws x t1 t2")
}

pub fn ws_violation() -> Trace {
    tr("txn t1 p1 r:x:0 w:y:1
        txn t2 p2 r:y:0 w:x:1
        rf T0 t1 x
        rf T0 t2 y")
}

/// Both reads observe the writes.
pub fn mp_trace() -> Trace {
    tr("txn t1 p1 w:x:1
        txn t2 p1 w:y:1
        txn t3 p2 r:y:1
        txn t4 p2 r:x:1
        rf t2 t3 y
        rf t1 t4 x")
}
