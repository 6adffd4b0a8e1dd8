//! Link-graph authority ranking: teleportation-free reinforcement ranking
//! (reverse Bellman iteration) alongside classical PageRank, with dense
//! oracles, graph-update experiments and rank comparison tooling.

pub mod cli;
pub mod compare;
pub mod experiments;
pub mod graph;
pub mod ranking;
