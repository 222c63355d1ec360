//! Program transforms: the read/write split and the monitor instrumentation for
//! PC-vs-SI robustness.

mod monitor;

pub use crate::trace::{half_tid, merge_split_trace, split_trace, Half, Origin};
pub use monitor::{
    check_robust_pcsi_via_monitor, explore_monitor, instrument, Instrumented, MonitorError, MonitorOutcome,
    MonitorViolation,
};

use crate::lang::{normalize, Instr, NormalizeError, Process, Program, Stmt, Transaction};
use std::collections::BTreeMap;

/// A split program together with the origin of each of its transactions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitProgram {
    pub program: Program,
    pub origin: BTreeMap<String, Origin>,
}

impl SplitProgram {
    pub fn origin_of(&self, tid: &str) -> Option<&Origin> {
        self.origin.get(tid)
    }

    /// Tids of the read and write halves of an original transaction, in that order.
    pub fn halves_of(&self, tid: &str) -> Vec<&str> {
        let mut v: Vec<(&Half, &str)> =
            self.origin.iter().filter(|(_, o)| o.tid == tid).map(|(t, o)| (&o.half, t.as_str())).collect();
        v.sort();
        v.into_iter().map(|(_, t)| t).collect()
    }
}

/// Parts of a normalized transaction as placed by the split.
pub(crate) struct Parts<'a> {
    pub read: Option<Vec<&'a Instr>>,
    pub write: Option<Vec<&'a Instr>>,
}

/// Read half: reads, plus tests when there are reads or no writes. Write half: writes
/// and lets, plus tests when there are no reads. Lets go with the read half when there
/// is no write half.
pub(crate) fn parts(t: &Transaction) -> Parts<'_> {
    let of = |f: fn(&Stmt) -> bool| t.body.iter().filter(move |i| f(&i.stmt));
    let reads: Vec<&Instr> = of(|s| matches!(s, Stmt::Read { .. })).collect();
    let tests: Vec<&Instr> = of(|s| matches!(s, Stmt::Assume(_) | Stmt::Assert(_))).collect();
    let writes: Vec<&Instr> = of(|s| matches!(s, Stmt::Write { .. })).collect();
    let lets: Vec<&Instr> = of(|s| matches!(s, Stmt::Let { .. })).collect();
    let has_w = !writes.is_empty();
    let has_r = !reads.is_empty() || !has_w;
    let read = has_r.then(|| {
        let mut v = reads.clone();
        v.extend(&tests);
        if !has_w {
            v.extend(&lets);
        }
        v
    });
    let write = has_w.then(|| {
        let mut v = Vec::new();
        if reads.is_empty() {
            v.extend(&tests);
        }
        v.extend(&writes);
        v.extend(&lets);
        v
    });
    Parts { read, write }
}

/// Splits every transaction `t` into `t_r` (reads and assumes) followed in program order by
/// `t_w` (writes). A transaction with a single non-empty half keeps its id.
pub fn split(p: &Program) -> Result<SplitProgram, NormalizeError> {
    let n = normalize(p)?;
    let mut origin = BTreeMap::new();
    let mut processes = Vec::new();
    for proc_ in &n.processes {
        let mut txns = Vec::new();
        for t in &proc_.txns {
            let Parts { read, write } = parts(t);
            let both = read.is_some() && write.is_some();
            for (half, body) in [(Half::Read, read), (Half::Write, write)] {
                let Some(body) = body else { continue };
                let tid = half_tid(&t.tid, half, both);
                origin.insert(tid.clone(), Origin { tid: t.tid.clone(), half });
                txns.push(Transaction { tid, unfold: None, body: body.into_iter().cloned().collect() });
            }
        }
        processes.push(Process { pid: proc_.pid.clone(), regs: proc_.regs.clone(), txns });
    }
    let program = Program {
        name: n.name.as_ref().map(|s| format!("{s}_RW")),
        domain: n.domain.clone(),
        vars: n.vars.clone(),
        processes,
    };
    Ok(SplitProgram { program, origin })
}
