use super::{Dep, EventKind, Trace, TraceError, TxnRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Read,
    Write,
}

/// Original transaction a half of a split transaction comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub tid: String,
    pub half: Half,
}

/// Id of one half of `tid`. A transaction keeps its id when only one half is non-empty.
pub fn half_tid(tid: &str, half: Half, both: bool) -> String {
    match (both, half) {
        (false, _) => tid.to_string(),
        (true, Half::Read) => format!("{tid}_r"),
        (true, Half::Write) => format!("{tid}_w"),
    }
}

/// Splits every transaction into a read half (its reads) and a write half (its writes),
/// keeping only the non-empty halves. A transaction without events keeps a read half.
pub fn split_trace(t: &Trace) -> Trace {
    let mut out = Trace { txns: vec![t.txns[0].clone()], po: Vec::new(), rf: Vec::new(), ws: Vec::new() };
    // indices of the halves of each original transaction; init stays whole
    let mut halves: Vec<Vec<usize>> = vec![vec![0]];
    let mut rd = vec![0; t.n()];
    let mut wr = vec![0; t.n()];
    for i in 1..t.n() {
        let rec = &t.txns[i];
        let has_r = t.has_reads(i) || !t.has_writes(i);
        let has_w = t.has_writes(i);
        let mut hs = Vec::new();
        for (half, present, kind) in [(Half::Read, has_r, EventKind::Read), (Half::Write, has_w, EventKind::Write)] {
            if !present {
                continue;
            }
            let events = rec.events.iter().filter(|e| e.kind == kind).cloned().collect();
            out.txns.push(TxnRecord {
                tid: half_tid(&rec.tid, half, has_r && has_w),
                process: rec.process.clone(),
                events,
                origin: Some(Origin { tid: rec.tid.clone(), half }),
            });
            let k = out.txns.len() - 1;
            hs.push(k);
            match half {
                Half::Read => rd[i] = k,
                Half::Write => wr[i] = k,
            }
        }
        halves.push(hs);
    }
    let mut po = BTreeSet::new();
    for &(a, b) in &t.po {
        for &x in &halves[a] {
            for &y in &halves[b] {
                po.insert((x, y));
            }
        }
    }
    for hs in &halves[1..] {
        if let [r, w] = hs[..] {
            po.insert((r, w));
        }
    }
    out.po = po.into_iter().collect();
    out.rf = t.rf.iter().map(|d| Dep::new(wr[d.from], rd[d.to], &d.var)).collect();
    out.ws = t.ws.iter().map(|d| Dep::new(wr[d.from], wr[d.to], &d.var)).collect();
    out.rf.sort();
    out.ws.sort();
    out
}

/// Merges the halves of a split trace back into single transactions. Every transaction
/// other than init must carry an [`Origin`] tag.
pub fn merge_split_trace(t: &Trace) -> Result<Trace, TraceError> {
    let mut out = Trace { txns: vec![t.txns[0].clone()], po: Vec::new(), rf: Vec::new(), ws: Vec::new() };
    let mut map = vec![0usize; t.n()];
    for i in 1..t.n() {
        let rec = &t.txns[i];
        let o = rec.origin.as_ref().ok_or_else(|| TraceError::Untagged(rec.tid.clone()))?;
        let j = match out.index_of(&o.tid) {
            Some(j) => j,
            None => {
                out.txns.push(TxnRecord {
                    tid: o.tid.clone(),
                    process: rec.process.clone(),
                    events: Vec::new(),
                    origin: None,
                });
                out.txns.len() - 1
            }
        };
        map[i] = j;
    }
    // read events first, then writes
    for (half, kind) in [(Half::Read, EventKind::Read), (Half::Write, EventKind::Write)] {
        for i in 1..t.n() {
            if t.txns[i].origin.as_ref().map(|o| o.half) == Some(half) {
                let ev: Vec<_> = t.txns[i].events.iter().filter(|e| e.kind == kind).cloned().collect();
                out.txns[map[i]].events.extend(ev);
            }
        }
    }
    let po: BTreeSet<(usize, usize)> =
        t.po.iter().map(|&(a, b)| (map[a], map[b])).filter(|(a, b)| a != b).collect();
    out.po = po.into_iter().collect();
    let project = |ds: &[Dep]| {
        let mut v: Vec<Dep> = ds.iter().map(|d| Dep::new(map[d.from], map[d.to], &d.var)).filter(|d| d.from != d.to).collect();
        v.sort();
        v.dedup();
        v
    };
    out.rf = project(&t.rf);
    out.ws = project(&t.ws);
    Ok(out)
}
