//! Robustness checking for bounded transactional programs under causal consistency (CC),
//! prefix consistency (PC), snapshot isolation (SI) and serializability (SER).

pub mod lang;
pub mod graph;
pub mod rel;
pub mod trace;
pub mod exec;
pub mod membership;
pub mod transform;
pub mod robustness;
pub mod movers;
pub mod corpus;

#[cfg(test)]
mod testutil;
