use super::*;
use crate::testutil::*;

fn deps(t: &Trace, ds: &[Dep]) -> Vec<(String, String)> {
    ds.iter().map(|d| (t.tid(d.from).to_string(), t.tid(d.to).to_string())).collect()
}

fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
    v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn cf_of_lost_update() {
    let t = lu_violation();
    assert_eq!(deps(&t, &t.cf()), pairs(&[("t1", "t2"), ("t2", "t1")]));
}

#[test]
fn cf_of_read_free_trace_is_empty() {
    let t = tr("txn a p w:x:1\ntxn b q w:x:2");
    assert!(t.cf().is_empty());
}

#[test]
fn cf_of_store_buffering() {
    let t = sb_violation();
    assert_eq!(deps(&t, &t.cf()), pairs(&[("t2", "t3"), ("t4", "t1")]));
}

#[test]
fn hb_acyclicity() {
    assert!(mp_trace().hb_graph().is_acyclic());
    assert!(!ws_violation().hb_graph().is_acyclic());
    assert!(tr("txn a p w:x:1").hb_graph().is_acyclic());
}

#[test]
fn lost_update_cycle_shape() {
    let t = lu_violation();
    let cs = t.hb_graph().simple_cycles(100).unwrap();
    assert_eq!(cs.len(), 1);
    assert!(cs[0].has_ws_then_cf);
    assert!(!cs[0].has_two_successive_cf);
    assert_eq!(cs[0].display(&t).to_string(), "t1 -ws|cf-> t2 -cf-> t1");
}

#[test]
fn write_skew_cycle_shape() {
    let cs = ws_violation().hb_graph().simple_cycles(100).unwrap();
    assert_eq!(cs.len(), 1);
    assert!(cs[0].has_two_successive_cf);
}

#[test]
fn init_has_no_incoming_edges() {
    for t in [sb_violation(), lu_violation(), ws_violation(), mp_trace()] {
        assert_eq!(t.hb().col(0), 0);
        assert!(t.hb_graph().simple_cycles(100).unwrap().iter().all(|c| !c.nodes.contains(&0)));
    }
}

#[test]
fn json_round_trip_is_exact() {
    for t in [sb_violation(), lu_violation(), mp_trace(), split_trace(&lu_violation())] {
        let s = t.to_json();
        let back = Trace::from_json(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(), s);
    }
}

#[test]
fn json_accepts_pairs_and_chains() {
    let src = r#"{"transactions":[
        {"tid":"init","process":"init","events":[{"kind":"write","var":"x","value":0}]},
        {"tid":"a","process":"p","events":[{"kind":"write","var":"x","value":1}]},
        {"tid":"b","process":"q","events":[{"kind":"write","var":"x","value":2}]},
        {"tid":"c","process":"q","events":[{"kind":"read","var":"x","value":1}]}],
      "po":[["b","c"]], "rf":[["a","c"]], "ws":[["init","a"],["a","b"]], "init":"init"}"#;
    let t = Trace::from_json(src).unwrap();
    assert_eq!(t.ws.len(), 3);
    assert_eq!(deps(&t, &t.cf()), pairs(&[("c", "b")]));
}

#[test]
fn json_rejects_bad_rf_value() {
    let mut t = mp_trace();
    t.txns[3].events[0].value = 0;
    assert!(matches!(Trace::from_json(&t.to_json()), Err(TraceError::Invalid(_))));
}

#[test]
fn split_of_lost_update() {
    let s = split_trace(&lu_violation());
    let names: Vec<&str> = s.txns.iter().map(|t| t.tid.as_str()).collect();
    assert_eq!(names, ["T0", "t1_r", "t1_w", "t2_r", "t2_w"]);
    assert_eq!(deps(&s, &s.rf), pairs(&[("T0", "t1_r"), ("T0", "t2_r")]));
    // the figure leaves out the cf edges that run parallel to po inside one transaction
    assert_eq!(deps(&s, &s.cf()), pairs(&[("t1_r", "t1_w"), ("t1_r", "t2_w"), ("t2_r", "t1_w"), ("t2_r", "t2_w")]));
    assert!(s.po.contains(&(1, 2)) && s.po.contains(&(3, 4)));
    assert!(s.hb_graph().is_acyclic());
    assert_eq!(merge_split_trace(&s).unwrap(), lu_violation());
}

#[test]
fn split_of_singleton_trace_is_identity() {
    let t = sb_violation();
    assert_eq!(split_trace(&t), t);
    assert_eq!(merge_split_trace(&split_trace(&t)).unwrap(), t);
    let empty = tr("");
    assert_eq!(merge_split_trace(&split_trace(&empty)).unwrap(), empty);
}

#[test]
fn merge_requires_tags() {
    assert!(matches!(merge_split_trace(&sb_violation()), Err(TraceError::Untagged(_))));
}
