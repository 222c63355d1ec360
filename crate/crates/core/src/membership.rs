//! Trace membership under CC, PC, SI and SER: axiomatic search for visibility and
//! arbitration witnesses, and direct happens-before characterizations.

use crate::graph::{CycleOverflow, DEFAULT_CYCLE_BUDGET};
use crate::rel::{bits, Rel};
use crate::trace::{split_trace, Trace};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    CC,
    PC,
    SI,
    SER,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::CC, Model::PC, Model::SI, Model::SER];

    /// Position in the strength order CC < PC < SI < SER.
    pub fn strength(self) -> u8 {
        self as u8
    }

    pub fn weaker_than(self, o: Model) -> bool {
        self.strength() < o.strength()
    }

    pub fn axioms(self) -> &'static [Axiom] {
        use Axiom::*;
        match self {
            Model::CC => &[RetVal, Causal, Arb, VisInArb],
            Model::PC => &[RetVal, Causal, Arb, VisInArb, Prefix],
            Model::SI => &[RetVal, Causal, Arb, VisInArb, Prefix, Conflict],
            Model::SER => &[RetVal, Causal, Arb, Ser],
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::CC => "CC",
            Model::PC => "PC",
            Model::SI => "SI",
            Model::SER => "SER",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Model, String> {
        match s.to_ascii_uppercase().as_str() {
            "CC" => Ok(Model::CC),
            "PC" => Ok(Model::PC),
            "SI" => Ok(Model::SI),
            "SER" => Ok(Model::SER),
            _ => Err(format!("unknown consistency model `{s}` (expected cc, pc, si or ser)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axiom {
    /// Every read returns the last write, in arbitration order, among visible writers.
    RetVal,
    /// `(po ∪ rf)+ ⊆ vis`
    Causal,
    /// `(po ∪ rf ∪ ws)+ ⊆ arb`
    Arb,
    /// `vis ⊆ arb`
    VisInArb,
    /// `arb ; vis ⊆ vis`
    Prefix,
    /// `ws ⊆ vis`
    Conflict,
    /// `vis = arb`
    Ser,
}

impl FromStr for Axiom {
    type Err = String;
    fn from_str(s: &str) -> Result<Axiom, String> {
        Ok(match s.to_ascii_lowercase().trim_start_matches("ax") {
            "retval" => Axiom::RetVal,
            "causal" => Axiom::Causal,
            "arb" => Axiom::Arb,
            "visinarb" => Axiom::VisInArb,
            "prefix" => Axiom::Prefix,
            "conflict" => Axiom::Conflict,
            "ser" => Axiom::Ser,
            _ => return Err(format!("unknown axiom `{s}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MembershipError {
    #[error("the oracle handles at most {max} transactions besides init, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error(transparent)]
    Cycles(#[from] CycleOverflow),
}

pub const ORACLE_MAX_TXNS: usize = 8;

/// A trace with candidate visibility and arbitration relations.
#[derive(Clone, Debug)]
pub struct AbstractExecution<'t> {
    pub trace: &'t Trace,
    pub vis: Rel,
    pub arb: Rel,
}

impl<'t> AbstractExecution<'t> {
    /// Builds an execution whose arbitration is the given total order of all transactions.
    pub fn new(trace: &'t Trace, vis: Rel, arb_order: &[usize]) -> AbstractExecution<'t> {
        let mut arb = Rel::new(trace.n());
        for (i, &a) in arb_order.iter().enumerate() {
            for &b in &arb_order[i + 1..] {
                arb.add(a, b);
            }
        }
        AbstractExecution { trace, vis, arb }
    }

    pub fn arb_order(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.trace.n()).collect();
        v.sort_by_key(|&i| self.arb.col(i).count_ones());
        v
    }
}

pub fn vis0(t: &Trace) -> Rel {
    t.po_rel().union(&t.rf_rel())
}

pub fn arb0(t: &Trace) -> Rel {
    vis0(t).union(&t.ws_rel())
}

/// Arbitration-maximal writer of `x` among the transactions in `mask`.
fn max_writer(t: &Trace, arb: &Rel, mask: u64, x: &str) -> Option<usize> {
    let ws: Vec<usize> = bits(mask).filter(|&w| t.writes_var(w, x)).collect();
    ws.iter().copied().find(|&a| ws.iter().all(|&b| b == a || arb.has(b, a)))
}

fn retval_ok(t: &Trace, arb: &Rel, i: usize, visible: u64) -> bool {
    t.reads(i).all(|e| {
        // an empty candidate set resolves to init
        let w = max_writer(t, arb, visible, &e.var).unwrap_or(0);
        t.rf_source(i, &e.var) == Some(w)
    })
}

/// Evaluates one axiom. AxRetVal requires the arbitration-maximal visible writer to be
/// the read's rf source (whose write carries the read value in a valid trace).
pub fn axiom_holds(ax: Axiom, e: &AbstractExecution) -> bool {
    let t = e.trace;
    match ax {
        Axiom::RetVal => (0..t.n()).all(|i| retval_ok(t, &e.arb, i, e.vis.col(i))),
        Axiom::Causal => vis0(t).plus().is_subset(&e.vis),
        Axiom::Arb => arb0(t).plus().is_subset(&e.arb),
        Axiom::VisInArb => e.vis.is_subset(&e.arb),
        Axiom::Prefix => e.arb.compose(&e.vis).is_subset(&e.vis),
        Axiom::Conflict => t.ws_rel().is_subset(&e.vis),
        Axiom::Ser => e.vis == e.arb,
    }
}

pub fn model_holds(m: Model, e: &AbstractExecution) -> bool {
    m.axioms().iter().all(|&a| axiom_holds(a, e))
}

/// Searches for (vis, arb) satisfying the model's axioms. Arbitration orders are the
/// linear extensions of `arb0+`; for each placement the least admissible visibility set
/// is chosen: `vis0+` predecessors for CC, the shortest arbitration prefix containing them
/// for PC (and the ws predecessors for SI), and all predecessors for SER. Smaller
/// visibility sets never falsify RetVal and only shrink later transactions' obligations.
pub fn oracle_witness<'t>(t: &'t Trace, m: Model) -> Result<Option<AbstractExecution<'t>>, MembershipError> {
    let n = t.n();
    if n - 1 > ORACLE_MAX_TXNS {
        return Err(MembershipError::TooLarge { max: ORACLE_MAX_TXNS, got: n - 1 });
    }
    let a0 = arb0(t).plus();
    let v0 = vis0(t).plus();
    let ws = t.ws_rel();
    if !a0.is_acyclic() {
        return Ok(None);
    }
    let mut s = Search { t, m, a0, v0, ws, order: Vec::new(), placed: 0, vis: vec![0; n] };
    if s.go() {
        let mut vis = Rel::new(n);
        for (b, &m) in s.vis.iter().enumerate() {
            for a in bits(m) {
                vis.add(a, b);
            }
        }
        let order = s.order.clone();
        return Ok(Some(AbstractExecution::new(t, vis, &order)));
    }
    Ok(None)
}

struct Search<'a> {
    t: &'a Trace,
    m: Model,
    a0: Rel,
    v0: Rel,
    ws: Rel,
    order: Vec<usize>,
    placed: u64,
    /// Visible predecessors of each placed transaction.
    vis: Vec<u64>,
}

impl Search<'_> {
    fn go(&mut self) -> bool {
        let n = self.t.n();
        if self.order.len() == n {
            return true;
        }
        for c in 0..n {
            if self.placed >> c & 1 == 1 || self.a0.col(c) & !self.placed != 0 {
                continue;
            }
            let visible = self.visible(c);
            let arb = self.current_arb();
            if !retval_ok(self.t, &arb, c, visible) {
                continue;
            }
            self.vis[c] = visible;
            self.order.push(c);
            self.placed |= 1 << c;
            if self.go() {
                return true;
            }
            self.placed &= !(1 << c);
            self.order.pop();
        }
        false
    }

    fn current_arb(&self) -> Rel {
        let mut arb = Rel::new(self.t.n());
        for (i, &a) in self.order.iter().enumerate() {
            for &b in &self.order[i + 1..] {
                arb.add(a, b);
            }
        }
        arb
    }

    /// Least visibility set for `c` placed next.
    fn visible(&self, c: usize) -> u64 {
        let mut need = self.v0.col(c);
        if self.m == Model::SI {
            need |= self.ws.col(c);
        }
        match self.m {
            Model::CC => need,
            Model::SER => self.placed,
            Model::PC | Model::SI => {
                // shortest arbitration prefix covering `need`
                let last = self.order.iter().rposition(|&a| need >> a & 1 == 1);
                match last {
                    None => 0,
                    Some(k) => self.order[..=k].iter().fold(0, |m, &a| m | 1 << a),
                }
            }
        }
    }
}

/// Membership by witness search; see [`oracle_witness`].
pub fn oracle_member(t: &Trace, m: Model) -> Result<bool, MembershipError> {
    Ok(oracle_witness(t, m)?.is_some())
}

/// `arb0+` is acyclic and `vis0+ ; cf` is irreflexive: no transaction is overwritten, for a
/// variable it reads, by a transaction it causally depends on.
pub fn member_cc(t: &Trace) -> bool {
    let vc = vis0(t).plus().compose(&t.cf_rel());
    arb0(t).is_acyclic() && (0..t.n()).all(|i| !vc.has(i, i))
}

/// The split trace is serializable.
pub fn member_pc(t: &Trace) -> bool {
    member_ser(&split_trace(t))
}

/// PC, and every simple happens-before cycle contains two successive cf steps.
pub fn member_si(t: &Trace) -> Result<bool, MembershipError> {
    member_si_with_budget(t, DEFAULT_CYCLE_BUDGET)
}

pub fn member_si_with_budget(t: &Trace, cycle_budget: usize) -> Result<bool, MembershipError> {
    if !member_pc(t) {
        return Ok(false);
    }
    let mut ok = true;
    t.hb_graph().for_each_cycle(cycle_budget, |c| {
        if c.has_two_successive_cf {
            ControlFlow::Continue(())
        } else {
            ok = false;
            ControlFlow::Break(())
        }
    })?;
    Ok(ok)
}

/// Happens-before is acyclic.
pub fn member_ser(t: &Trace) -> bool {
    t.hb_graph().is_acyclic()
}

pub fn member(t: &Trace, m: Model) -> Result<bool, MembershipError> {
    Ok(match m {
        Model::CC => member_cc(t),
        Model::PC => member_pc(t),
        Model::SI => member_si(t)?,
        Model::SER => member_ser(t),
    })
}

#[cfg(test)]
mod tests;
