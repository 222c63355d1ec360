//! Acceptance gate: one PASS/FAIL line per criterion. Runs without the libtest harness so
//! the lines are always printed; exits non-zero when any criterion fails.

mod common;

use common::{compiled, corpus_traces, program_text};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::collections::BTreeSet;
use std::time::{Duration, Instant};
use txrobust::corpus;
use txrobust::lang::{compile, parse};
use txrobust::membership::{member, oracle_member, Model, Model::*};
use txrobust::movers::{build_graph, prove_robust_cc_pc, prove_robust_pc_si, EdgeKind};
use txrobust::robustness::{
    bruteforce_robust, candidate_traces, check, movers_verdict, robust_cc_si, Budget, Method, Outcome, Verdict,
};
use txrobust::trace::{split_trace, HbGraph, Trace, CF, WS};
use txrobust::transform::{check_robust_pcsi_via_monitor, split};

const LITMUS_LIMIT: Duration = Duration::from_secs(10);
const TABLE_LIMIT: Duration = Duration::from_secs(300);
const MIN_ORACLE_TRACES: usize = 500;
const MAX_ORACLE_TXNS: usize = 8;
const PROPERTY_CASES: u32 = 1000;

const PAIRS: [(Model, Model); 5] = [(CC, PC), (PC, SI), (CC, SI), (SI, SER), (CC, SER)];

/// Robust (`true`) per column cc-pc, pc-si, cc-si, si-ser, cc-ser.
const TABLE: [(&str, [bool; 5]); 8] = [
    ("betting", [true, true, true, true, true]),
    ("cassandra_lock", [true, true, true, true, true]),
    ("epinions", [false, true, false, true, false]),
    ("fusionticket", [false, false, false, true, false]),
    ("simple_currency_exchange", [true, true, true, true, true]),
    ("subscription", [true, false, false, true, false]),
    ("twitter", [false, false, false, true, false]),
    ("vote", [true, true, true, false, false]),
];

struct Gate {
    failed: bool,
}

impl Gate {
    fn report(&mut self, n: u32, ok: bool, what: &str, detail: String) {
        self.failed |= !ok;
        println!("{} criterion {n}: {what}; {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn source(name: &str) -> &'static str {
    corpus::get(name).unwrap_or_else(|| panic!("missing corpus entry {name}")).source
}

fn in_difference(t: &Trace, from: Model, to: Model) -> bool {
    member(t, from).unwrap()
        && !member(t, to).unwrap()
        && oracle_member(t, from).unwrap_or(true)
        && !oracle_member(t, to).unwrap_or(false)
}

fn verdict_ok(v: &Verdict, robust: bool) -> bool {
    match &v.outcome {
        Outcome::Robust => robust,
        Outcome::Violation(w) => !robust && (w.of_split || in_difference(&w.witness, v.from, v.to)),
        // movers abstain on violations
        Outcome::Unknown(_) => v.method == Method::Movers && !robust,
    }
}

fn criterion1(g: &mut Gate) -> Duration {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut runs = 0;
    let mut cases: Vec<(&str, Model, Model, bool)> =
        vec![("sb", CC, PC, false), ("lu", PC, SI, false), ("ws", SI, SER, false)];
    cases.extend(PAIRS.iter().map(|&(f, t)| ("mp", f, t, true)));
    for (name, f, t, robust) in cases {
        let c = compiled(source(name));
        for m in Method::ALL.into_iter().filter(|m| m.applies(f, t)) {
            runs += 1;
            let v = check(&c, f, t, m, Budget::default()).unwrap();
            // the MP proofs must come from every method, movers included
            if !verdict_ok(&v, robust) || (robust && !v.is_robust()) {
                bad.push(format!("{name} {f}-{t} {m}: {}", v.outcome.label()));
            }
        }
    }
    let el = start.elapsed();
    let ok = bad.is_empty() && el < LITMUS_LIMIT;
    g.report(
        1,
        ok,
        "litmus verdicts (SB cc-pc, LU pc-si, WS si-ser violations; MP robust for all pairs)",
        format!("{runs} method runs, mismatches {bad:?}, {:.2}s (limit {}s)", el.as_secs_f64(), LITMUS_LIMIT.as_secs()),
    );
    el
}

fn criterion2(g: &mut Gate) -> Duration {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut rows = Vec::new();
    for (name, want) in TABLE {
        let c = compiled(source(name));
        let mut row = Vec::new();
        for (&(f, t), &robust) in PAIRS.iter().zip(want.iter()) {
            let proved = Method::Movers.applies(f, t)
                && check(&c, f, t, Method::Movers, Budget::default()).unwrap().is_robust();
            let (cell, ok) = if proved {
                ("yes(movers)", robust)
            } else {
                let v = check(&c, f, t, Method::BruteForce, Budget::default()).unwrap();
                match &v.outcome {
                    Outcome::Robust => ("yes", robust),
                    Outcome::Violation(w) => ("no", !robust && in_difference(&w.witness, f, t)),
                    Outcome::Unknown(_) => ("unknown", false),
                }
            };
            if !ok {
                bad.push(format!("{name} {f}-{t}"));
            }
            row.push(cell);
        }
        rows.push(format!("{name}=[{}]", row.join(" ")));
    }
    let el = start.elapsed();
    let ok = bad.is_empty() && el < TABLE_LIMIT;
    g.report(
        2,
        ok,
        "benchmark matrix reproduced (yes by movers or bruteforce, no with a checked witness)",
        format!("{}; mismatches {bad:?}; {:.2}s (limit {}s)", rows.join(", "), el.as_secs_f64(), TABLE_LIMIT.as_secs()),
    );
    el
}

fn criterion3(g: &mut Gate) {
    let mut all = corpus_traces();
    let mut n_direct = 0;
    // the split programs of the corpus contribute their own traces
    for e in corpus::all() {
        let rw = compile(&split(&parse(e.source).unwrap()).unwrap().program).unwrap();
        all.extend(candidate_traces(&rw, 1_000_000).unwrap().into_iter().map(|t| (format!("{}_rw", e.name), t)));
    }
    let mut n = 0;
    let mut disagree = Vec::new();
    for (name, t) in all {
        if t.n() - 1 > MAX_ORACLE_TXNS {
            continue;
        }
        n += 1;
        n_direct += usize::from(!name.ends_with("_rw"));
        for m in Model::ALL {
            if member(&t, m).unwrap() != oracle_member(&t, m).unwrap() {
                disagree.push(format!("{name} {m}"));
            }
        }
    }
    let ok = n >= MIN_ORACLE_TRACES && disagree.is_empty();
    g.report(
        3,
        ok,
        "characterizations agree with the axiomatic oracle on corpus traces",
        format!("{n} traces with <= {MAX_ORACLE_TXNS} transactions (need {MIN_ORACLE_TRACES}; {n_direct} from the programs, the rest from their split forms), 4 models each, {} disagreements", disagree.len()),
    );
}

fn bf(c: &txrobust::lang::Compiled, f: Model, t: Model) -> Result<bool, TestCaseError> {
    let v = bruteforce_robust(c, f, t, Budget::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    match v.outcome {
        Outcome::Unknown(r) => Err(TestCaseError::fail(r)),
        o => Ok(o == Outcome::Robust),
    }
}

fn fail(what: &str, src: &str) -> TestCaseError {
    TestCaseError::fail(format!("{what}\n{src}"))
}

/// Properties (a) to (h) on one program.
fn properties(src: &str) -> Result<(), TestCaseError> {
    let p = parse(src).unwrap();
    let c = compile(&p).unwrap();
    for t in candidate_traces(&c, 100_000).unwrap() {
        let m: Vec<bool> = [SER, SI, PC, CC].iter().map(|&m| member(&t, m).unwrap()).collect();
        if m.windows(2).any(|w| w[0] && !w[1]) {
            return Err(fail("(a) inclusion chain", src));
        }
        let s = split_trace(&t);
        if member(&t, CC).unwrap() != member(&s, CC).unwrap() {
            return Err(fail("(b) split preserves CC", src));
        }
        if m[2] != member(&s, SER).unwrap() {
            return Err(fail("(c) PC iff split is SER", src));
        }
        if m[2] {
            for cy in HbGraph::of(&t).simple_cycles(100_000).unwrap() {
                let k = cy.labels.len();
                if !(0..k).any(|i| cy.labels[i] & (WS | CF) != 0 && cy.labels[(i + 1) % k] & CF != 0) {
                    return Err(fail("(g) PC cycle shape", src));
                }
            }
        }
    }
    let c_rw = compile(&split(&p).unwrap().program).unwrap();
    let cc_pc = bf(&c, CC, PC)?;
    if cc_pc != bf(&c_rw, CC, SER)? {
        return Err(fail("(d) cc-pc equals split cc-ser", src));
    }
    let pc_si = bf(&c, PC, SI)?;
    let mon = check_robust_pcsi_via_monitor(&c, Budget::default());
    if matches!(mon.outcome, Outcome::Unknown(_)) || mon.is_robust() != pc_si {
        return Err(fail("(e) monitor equals bruteforce", src));
    }
    let cc_si = bf(&c, CC, SI)?;
    if robust_cc_si(&c, Budget::default()).unwrap().is_robust() != cc_si {
        return Err(fail("(f) cc-si conjunction", src));
    }
    for (f, t, truth) in [(CC, PC, cc_pc), (PC, SI, pc_si), (CC, SI, cc_si)] {
        if movers_verdict(&c, f, t, Budget::default()).unwrap().is_robust() && !truth {
            return Err(fail("(h) movers soundness", src));
        }
    }
    Ok(())
}

fn criterion4(g: &mut Gate) {
    let cfg = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let seen = std::cell::RefCell::new(BTreeSet::new());
    let start = Instant::now();
    let r = runner.run(&program_text(), |src| {
        seen.borrow_mut().insert(src.clone());
        properties(&src)
    });
    let detail = match &r {
        Ok(()) => "0 counterexamples".to_string(),
        Err(e) => format!("counterexample: {e}"),
    };
    g.report(
        4,
        r.is_ok(),
        "property suites (a)-(h) on random programs (<= 2 processes x 2 transactions x 2 variables)",
        format!("{PROPERTY_CASES} cases, {} distinct programs, {detail}, {:.1}s", seen.borrow().len(), start.elapsed().as_secs_f64()),
    );
}

fn criterion5(g: &mut Gate) {
    // message passing graph: two po, two MRF, two MRW edges
    let mp = build_graph(&split(&parse(source("mp")).unwrap()).unwrap(), 1 << 16).unwrap();
    let got: BTreeSet<(String, String, EdgeKind)> = mp.named_edges().into_iter().collect();
    let want: BTreeSet<(String, String, EdgeKind)> = [
        ("t1", "t2", EdgeKind::PO),
        ("t3", "t4", EdgeKind::PO),
        ("t1", "t4", EdgeKind::MRF),
        ("t2", "t3", EdgeKind::MRF),
        ("t4", "t1", EdgeKind::MRW),
        ("t3", "t2", EdgeKind::MRW),
    ]
    .into_iter()
    .map(|(a, b, k)| (a.to_string(), b.to_string(), k))
    .collect();
    let nodes_ok = mp.nodes == ["t1", "t2", "t3", "t4"];
    let graph_ok = nodes_ok && got == want && prove_robust_cc_pc(&mp, 1000).is_robust() && prove_robust_pc_si(&mp, 1000).is_robust();

    // split of the lost-update violation where t1 is stored first
    let lu = compiled(source("lu"));
    let violations: Vec<Trace> =
        candidate_traces(&lu, 10_000).unwrap().into_iter().filter(|t| in_difference(t, PC, SI)).collect();
    let stored_first = violations.iter().find(|t| t.ws_chain("x") == [0, 1, 2]);
    let split_ok = match stored_first {
        Some(t) => {
            let s = split_trace(t);
            let rel = |deps: Vec<(usize, usize)>| -> BTreeSet<(String, String)> {
                deps.into_iter()
                    .filter(|&(a, b)| a != 0 && b != 0)
                    // cf inside one transaction runs parallel to po and is not drawn
                    .filter(|&(a, b)| s.tid(a)[..2] != s.tid(b)[..2])
                    .map(|(a, b)| (s.tid(a).to_string(), s.tid(b).to_string()))
                    .collect()
            };
            let set = |v: &[(&str, &str)]| -> BTreeSet<(String, String)> {
                v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
            };
            let po_all: BTreeSet<(String, String)> = s
                .po
                .iter()
                .filter(|&&(a, b)| a != 0 && b != 0)
                .map(|&(a, b)| (s.tid(a).to_string(), s.tid(b).to_string()))
                .collect();
            violations.len() == 2
                && po_all == set(&[("t1_r", "t1_w"), ("t2_r", "t2_w")])
                && rel(s.rf.iter().map(|d| (d.from, d.to)).collect()).is_empty()
                && rel(s.ws.iter().map(|d| (d.from, d.to)).collect()) == set(&[("t1_w", "t2_w")])
                && rel(s.cf().iter().map(|d| (d.from, d.to)).collect()) == set(&[("t1_r", "t2_w"), ("t2_r", "t1_w")])
        }
        None => false,
    };
    g.report(
        5,
        graph_ok && split_ok,
        "figure artifacts (MP dependency graph; split of the lost-update trace)",
        format!("MP graph {} ({} edges); LU split relations {}", if graph_ok { "exact" } else { "differs" }, got.len(), if split_ok { "exact" } else { "differ" }),
    );
}

fn main() {
    let mut g = Gate { failed: false };
    let t1 = criterion1(&mut g);
    let t2 = criterion2(&mut g);
    criterion3(&mut g);
    criterion4(&mut g);
    criterion5(&mut g);
    g.report(
        6,
        t1 < LITMUS_LIMIT && t2 < TABLE_LIMIT,
        "wall-clock and complexity claims are not reproduced; the runtime limits of criteria 1 and 2 stand in",
        format!("litmus {:.2}s, matrix {:.2}s", t1.as_secs_f64(), t2.as_secs_f64()),
    );
    if g.failed {
        std::process::exit(1);
    }
}
