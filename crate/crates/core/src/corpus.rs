//! Bundled example programs with their expected robustness verdicts.
//!
//! Each file carries `// @expect cc-pc=yes pc-si=no ...` and optionally
//! `// @provenance ...` header lines.

use crate::membership::Model;
use std::collections::BTreeMap;

const FILES: &[(&str, &str)] = &[
    ("sb", include_str!("../corpus/sb.txn")),
    ("lu", include_str!("../corpus/lu.txn")),
    ("ws", include_str!("../corpus/ws.txn")),
    ("mp", include_str!("../corpus/mp.txn")),
    ("fusionticket_blind", include_str!("../corpus/fusionticket_blind.txn")),
    ("twitter_register", include_str!("../corpus/twitter_register.txn")),
    ("transformed_twitter", include_str!("../corpus/transformed_twitter.txn")),
    ("betting", include_str!("../corpus/betting.txn")),
    ("cassandra_lock", include_str!("../corpus/cassandra_lock.txn")),
    ("epinions", include_str!("../corpus/epinions.txn")),
    ("fusionticket", include_str!("../corpus/fusionticket.txn")),
    ("simple_currency_exchange", include_str!("../corpus/simple_currency_exchange.txn")),
    ("subscription", include_str!("../corpus/subscription.txn")),
    ("twitter", include_str!("../corpus/twitter.txn")),
    ("vote", include_str!("../corpus/vote.txn")),
];

/// The five pairs reported per program, in table order.
pub const PAIRS: [(Model, Model); 5] = [
    (Model::CC, Model::PC),
    (Model::PC, Model::SI),
    (Model::CC, Model::SI),
    (Model::SI, Model::SER),
    (Model::CC, Model::SER),
];

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    pub provenance: Option<String>,
    /// `true` when the program is expected to be robust for the pair.
    pub expect: BTreeMap<(Model, Model), bool>,
}

fn pair_of(s: &str) -> Option<(Model, Model)> {
    let (a, b) = s.split_once('-')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

fn entry(name: &'static str, source: &'static str) -> Entry {
    let mut provenance = None;
    let mut expect = BTreeMap::new();
    for line in source.lines() {
        let Some(rest) = line.trim().strip_prefix("//") else { continue };
        let rest = rest.trim();
        if let Some(p) = rest.strip_prefix("@provenance") {
            provenance = Some(p.trim().to_string());
        } else if let Some(e) = rest.strip_prefix("@expect") {
            for kv in e.split_whitespace() {
                let (k, v) = kv.split_once('=').unwrap_or_else(|| panic!("{name}: bad @expect item {kv}"));
                let pair = pair_of(k).unwrap_or_else(|| panic!("{name}: bad pair {k}"));
                expect.insert(pair, v == "yes");
            }
        }
    }
    Entry { name, source, provenance, expect }
}

pub fn all() -> Vec<Entry> {
    FILES.iter().map(|&(n, s)| entry(n, s)).collect()
}

pub fn get(name: &str) -> Option<Entry> {
    FILES.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|&(n, s)| entry(n, s))
}
