//! Desk-scale reproductions of the stability and updating behaviour of the
//! two ranking methods: synthetic evolving graphs, warm-start convergence
//! experiments, and independence checks under graph changes.

mod evolution;
mod independence;
mod update;

use thiserror::Error;

use crate::graph::GraphError;
use crate::ranking::RankError;

pub use evolution::{generate_evolution, Evolution, EvolutionSpec, StepSpec};
pub use independence::{
    check_altruistic_independence, check_disjoint_independence, link_deletion_locality,
    AltruisticReport, CheckConfig, DisjointReport, LocalityReport, NodeChange,
};
pub use update::{
    default_pairs, run_update_experiment, write_summary, ExperimentConfig, InitKind, Method,
    UpdateExperimentResult,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("invalid evolution spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Input(String),
}

/// Largest absolute entrywise difference.
pub(crate) fn max_abs_diff(a: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    a.into_iter()
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
