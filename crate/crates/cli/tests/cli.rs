use std::path::PathBuf;
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_txrobust"));
    c.env_remove("ROBUST_BUDGET");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Writes a bundled corpus entry into `dir`.
fn entry(dir: &TempDir, name: &str) -> String {
    let src = stdout(&run(&["corpus", "--show", name]));
    assert!(src.contains("program"), "{name}");
    let p: PathBuf = dir.path().join(format!("{name}.txn"));
    std::fs::write(&p, src).unwrap();
    p.to_string_lossy().into_owned()
}

fn file(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn sb_cc_pc_all_methods() {
    let d = TempDir::new().unwrap();
    let sb = entry(&d, "sb");
    let o = run(&["check-robustness", &sb, "--from", "cc", "--to", "pc", "--method", "all", "--json"]);
    assert_eq!(code(&o), 1);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let m = l["method"].as_str().unwrap();
        let v = l["verdict"].as_str().unwrap();
        if m == "movers" {
            assert_eq!(v, "unknown");
        } else {
            assert_eq!(v, "violation", "{m}");
            assert!(l["witness"]["transactions"].is_array());
        }
        assert!(l["tool"].as_str().unwrap().starts_with("txrobust "));
        assert!(l["budget"]["schedules"].as_u64().unwrap() > 0);
    }
}

#[test]
fn mp_is_cc_ser_robust() {
    let d = TempDir::new().unwrap();
    let mp = entry(&d, "mp");
    let o = run(&["check-robustness", &mp, "--from", "cc", "--to", "ser"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("robust"));
}

#[test]
fn vote_si_ser_violation() {
    let d = TempDir::new().unwrap();
    let v = entry(&d, "vote");
    assert_eq!(code(&run(&["check-robustness", &v, "--from", "si", "--to", "ser"])), 1);
}

#[test]
fn usage_errors_exit_3() {
    let d = TempDir::new().unwrap();
    let mp = entry(&d, "mp");
    assert_eq!(code(&run(&["check-robustness", &mp, "--from", "ser", "--to", "cc"])), 3);
    assert_eq!(code(&run(&["check-robustness", &mp, "--from", "si", "--to", "ser", "--method", "movers"])), 3);
    assert_eq!(code(&run(&["check-robustness", &mp, "--from", "cc"])), 3);
    let bad = file(&d, "bad.txn", "program B\nprocess p regs\n  txn t { write }\n");
    let o = run(&["parse", &bad]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.txn"));
    assert_eq!(code(&run(&["parse", "/nonexistent.txn"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
}

#[test]
fn budget_from_env_and_flags() {
    let d = TempDir::new().unwrap();
    let lu = entry(&d, "lu");
    let args = ["check-robustness", &lu, "--from", "pc", "--to", "si"];
    assert_eq!(code(&bin().args(args).env("ROBUST_BUDGET", "2").output().unwrap()), 2);
    // flags override the environment
    assert_eq!(code(&bin().args(args).args(["--budget-schedules", "100000"]).env("ROBUST_BUDGET", "2").output().unwrap()), 1);
    assert_eq!(code(&bin().args(args).env("ROBUST_BUDGET", "lots").output().unwrap()), 3);
}

#[test]
fn corpus_single_entry_matrix() {
    let o = run(&["corpus", "lu"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| l.starts_with("lu ")).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].split_whitespace().skip(1).collect::<Vec<_>>(), ["yes", "no", "no", "yes", "no"]);
}

#[test]
fn corpus_tight_budget_is_unknown_not_mismatch() {
    let o = run(&["corpus", "lu", "--budget-schedules", "2", "--json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).lines().all(|l| l.contains("\"matches\"")));
}

#[test]
fn full_corpus_matches() {
    let o = run(&["corpus"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("0 mismatches, 0 unknown"));
}

#[test]
fn export_mp_graph() {
    let d = TempDir::new().unwrap();
    let mp = entry(&d, "mp");
    let dot = stdout(&run(&["export", &mp, "--graph"]));
    for e in [
        "\"t1\" -> \"t4\" [label=\"MRF\"]",
        "\"t2\" -> \"t3\" [label=\"MRF\"]",
        "\"t4\" -> \"t1\" [label=\"MRW\"]",
        "\"t3\" -> \"t2\" [label=\"MRW\"]",
        "\"t1\" -> \"t2\" [label=\"po\"",
        "\"t3\" -> \"t4\" [label=\"po\"",
    ] {
        assert!(dot.contains(e), "{e}\n{dot}");
    }
    assert_eq!(dot.matches(" -> ").count(), 6);
}

#[test]
fn export_files() {
    let d = TempDir::new().unwrap();
    let lu = entry(&d, "lu");
    let out = d.path().join("out");
    let o = run(&["export", &lu, "--split", "--graph", "--instrumented", "--traces", "pc", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let split = std::fs::read_to_string(out.join("split.txn")).unwrap();
    assert!(split.contains("txn t1_r { read r1 x }"), "{split}");
    assert!(split.contains("txn t1_w { write x r1 + 1 }"), "{split}");
    let traces: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("traces.json")).unwrap()).unwrap();
    assert!(!traces.as_array().unwrap().is_empty());
    assert!(out.join("graph.dot").exists() && out.join("instrumented.txt").exists());
}

#[test]
fn export_empty_program_traces() {
    let d = TempDir::new().unwrap();
    let e = file(&d, "empty.txn", "program Empty\n");
    let o = run(&["export", &e, "--traces", "cc"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["transactions"].as_array().unwrap().len(), 1);
}

#[test]
fn check_trace_membership() {
    let d = TempDir::new().unwrap();
    let sb = entry(&d, "sb");
    let o = run(&["check-robustness", &sb, "--from", "cc", "--to", "pc", "--json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    let t = file(&d, "t.json", &v["witness"].to_string());
    let o = run(&["check-trace", &t, "--json"]);
    assert_eq!(code(&o), 0);
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["cc"]["member"], true);
    assert_eq!(m["pc"]["member"], false);
    assert_eq!(m["pc"]["oracle"], false);
    assert_eq!(code(&run(&["check-trace", &t, "--model", "pc"])), 1);
    assert_eq!(code(&run(&["check-trace", &t, "--model", "cc"])), 0);
    let bad = file(&d, "bad.json", "{\"transactions\": 3}");
    assert_eq!(code(&run(&["check-trace", &bad])), 3);
}

#[test]
fn prove_and_transform() {
    let d = TempDir::new().unwrap();
    let mp = entry(&d, "mp");
    assert_eq!(code(&run(&["prove-robustness", &mp, "--from", "cc", "--to", "si"])), 0);
    let lu = entry(&d, "lu");
    let o = run(&["prove-robustness", &lu, "--from", "pc", "--to", "si"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("inconclusive"));
    assert_eq!(code(&run(&["prove-robustness", &lu, "--from", "si", "--to", "ser"])), 3);
    let o = run(&["transform", &lu, "--instrument"]);
    assert!(stdout(&o).contains("assert"));
}

#[test]
fn domain_flag() {
    let d = TempDir::new().unwrap();
    let lu = entry(&d, "lu");
    let o = run(&["parse", &lu, "--domain", "0,1,2", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["domain"], serde_json::json!([0, 1, 2]));
    assert_eq!(code(&run(&["parse", &lu, "--domain", "1,2"])), 3);
}

#[test]
fn output_is_deterministic() {
    let a = stdout(&run(&["corpus", "--json"]));
    let b = stdout(&run(&["corpus", "--json"]));
    assert_eq!(a, b);
}
