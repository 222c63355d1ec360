use super::*;
use crate::lang::parse;
use crate::testutil::{LU, MP, SB, WS};
use crate::transform::split;
use EdgeKind::*;

fn graph(src: &str) -> DepGraph {
    build_graph(&split(&parse(src).unwrap()).unwrap(), 1 << 16).unwrap()
}

fn edges(g: &DepGraph) -> Vec<(&str, &str, EdgeKind)> {
    g.edges.iter().map(|&(a, b, k)| (g.nodes[a].as_str(), g.nodes[b].as_str(), k)).collect()
}

#[test]
fn mp_graph() {
    let g = graph(MP);
    let mut want = vec![
        ("t1", "t2", PO),
        ("t1", "t4", MRF),
        ("t2", "t3", MRF),
        ("t3", "t2", MRW),
        ("t3", "t4", PO),
        ("t4", "t1", MRW),
    ];
    want.sort();
    let mut got = edges(&g);
    got.sort();
    assert_eq!(got, want);
    assert!(!g.overflow);
    assert!(prove_robust_cc_pc(&g, 1000).is_robust());
    assert!(prove_robust_pc_si(&g, 1000).is_robust());
}

#[test]
fn sb_cc_pc_is_inconclusive() {
    let g = graph(SB);
    let p = prove_robust_cc_pc(&g, 1000);
    assert!(!p.is_robust());
    assert!(p.to_string().contains("MRW"), "{p}");
    assert!(prove_robust_pc_si(&g, 1000).is_robust());
}

#[test]
fn lu_pc_si_is_inconclusive() {
    let g = graph(LU);
    let p = prove_robust_pc_si(&g, 1000);
    let Proof::Inconclusive(w) = &p else { panic!("{p}") };
    assert!(w.contains("STO") && w.contains("MWW"), "{w}");
    assert!(edges(&g).contains(&("t1_w", "t2_w", MWW)));
}

#[test]
fn ws_is_provably_pc_si_robust() {
    assert!(prove_robust_pc_si(&graph(WS), 1000).is_robust());
}

#[test]
fn equal_writes_stay_dependent() {
    // same constant written by both processes: the states agree, the store order does not
    let g = graph("program C\nprocess p regs\n  txn a { write x 1 }\nprocess q regs\n  txn b { write x 1 }\n");
    assert_eq!(edges(&g), vec![("a", "b", MWW), ("b", "a", MWW)]);
    assert_eq!(g.value_commuting, [(0, 1), (1, 0)].into_iter().collect());
    assert!(g.to_dot().contains("color=gray"));
    let g = graph("program C\nprocess p regs\n  txn a { write x 1 }\nprocess q regs\n  txn b { write x 2 }\n");
    assert_eq!(edges(&g), vec![("a", "b", MWW), ("b", "a", MWW)]);
    assert!(g.value_commuting.is_empty());
}

#[test]
fn disjoint_transactions_have_no_edges() {
    let g = graph("program D\nprocess p regs r\n  txn a { read r y; write x 1 }\nprocess q regs\n  txn b { write z 1 }\n");
    assert_eq!(edges(&g), vec![("a_r", "a_w", PO), ("a_r", "a_w", STO)]);
}

#[test]
fn lost_update_with_equal_writes_is_inconclusive() {
    let g = graph("program E\nprocess p regs\n  txn a { write x 2 }\nprocess q regs r\n  txn b { read r x; write x 2 }\n");
    assert!(!prove_robust_pc_si(&g, 1000).is_robust());
}

#[test]
fn overflow_is_flagged() {
    let sp = split(&parse(MP).unwrap()).unwrap();
    let g = build_graph(&sp, 1).unwrap();
    assert!(g.overflow);
    assert!(g.value_commuting.is_empty());
    assert_eq!(g.edges, graph(MP).edges);
}

#[test]
fn cc_pc_matcher() {
    assert!(match_cc_pc(&[PO.bit(), MRW.bit(), PO.bit(), MRW.bit()]).is_some());
    // needs an MRW or MWW step besides the closing one
    assert!(match_cc_pc(&[PO.bit(), MRF.bit(), PO.bit(), MRW.bit()]).is_none());
    assert!(match_cc_pc(&[PO.bit(), MRW.bit(), PO.bit(), MRF.bit()]).is_none());
}

#[test]
fn pc_si_matcher() {
    assert_eq!(match_pc_si(&[STO.bit(), MRW.bit(), MWW.bit()]), Some(vec![STO, MRW, MWW]));
    // MRW must be followed by MRF, po or MWW
    assert!(match_pc_si(&[STO.bit(), MRW.bit(), MRW.bit(), MWW.bit()]).is_none());
    assert!(match_pc_si(&[STO.bit(), MRW.bit(), MRW.bit() | PO.bit(), MWW.bit()]).is_some());
    assert!(match_pc_si(&[PO.bit(), MRW.bit(), MWW.bit()]).is_none());
}

#[test]
fn dot_export() {
    let d = graph(LU).to_dot();
    assert!(d.starts_with("digraph \"LU_RW\""));
    assert!(d.contains("\"t1_r\" -> \"t1_w\""));
    assert!(d.contains("dir=none"));
}
