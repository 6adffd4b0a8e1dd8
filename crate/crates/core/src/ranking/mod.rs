//! Authority scores over a [`LinkGraph`](crate::graph::LinkGraph).
//!
//! Two iterative methods share one convergence loop and one stopping rule
//! (relative L1 step residual):
//!
//! * [`reinforcement_rank`] iterates the reverse Bellman update
//!   `R ← γ·Pᵀ·R + r` over the reverse adjacency. Dangling rows of the
//!   policy stay empty and there is no teleportation.
//! * [`pagerank`] runs the structured power iteration over the row-normalized
//!   adjacency, restoring dangling and teleport mass through a rank-one
//!   correction each step.
//!
//! [`DenseOracle`] solves both problems by direct factorization for
//! desk-scale graphs and is the ground truth the iterative paths are tested
//! against.

mod dense;
mod io;
mod kernel;
mod pagerank;
mod policy;
mod reinforcement;

use thiserror::Error;

pub use dense::{exact_solve_pagerank, exact_solve_rr, DenseOracle, DEFAULT_DENSE_CAP};
pub use io::{read_node_values, read_scores, write_scores, write_trace};
pub use pagerank::{pagerank, pagerank_with_reference, uniform_distribution};
pub use policy::{uniform_policy, uniform_rewards, NodeValues, Policy, PolicyRule, RewardVector};
pub use reinforcement::{
    reinforcement_rank, reinforcement_rank_with_reference, residual, reverse_bellman_step,
    truncated_rank,
};

#[derive(Debug, Error)]
pub enum RankError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("graph has {n} nodes, over the dense oracle cap of {cap}")]
    OverDenseCap { n: usize, cap: usize },
    #[error("dense system is singular")]
    Singular,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(
    what: &'static str,
    expected: usize,
    found: usize,
) -> Result<(), RankError> {
    if expected == found {
        Ok(())
    } else {
        Err(RankError::Dimension {
            what,
            expected,
            found,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Fixed point of the reverse Bellman equation.
    Authority,
    PageRank,
    /// Partial sum of the k-step historical rewards.
    Truncated {
        depth: usize,
    },
}

/// Per-node scores in internal index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub kind: ScoreKind,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Pairs each score with its node's external id.
    pub fn labeled(&self, g: &crate::graph::LinkGraph) -> Vec<(u64, f64)> {
        g.external_ids()
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect()
    }
}

/// Starting vector of an iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// `R₀ = r` for reinforcement ranking, `x₀ = v` for PageRank.
    #[default]
    Default,
    /// Warm start from a previous solution, in internal index order.
    FromScores(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    /// γ for reinforcement ranking, c for PageRank.
    pub discount: f64,
    /// Relative L1 threshold: stop once `‖x_{k+1} − x_k‖₁ ≤ tolerance·‖x_k‖₁`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub init: Init,
    /// Sequential, fixed-order reductions so repeated runs are bit-identical.
    pub deterministic: bool,
}

pub const DEFAULT_DISCOUNT: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

impl Default for IterationConfig {
    fn default() -> Self {
        Self::new(DEFAULT_DISCOUNT)
    }
}

impl IterationConfig {
    pub fn new(discount: f64) -> Self {
        Self {
            discount,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            init: Init::Default,
            deterministic: false,
        }
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn max_iterations(mut self, max: usize) -> Self {
        self.max_iterations = max;
        self
    }

    pub fn init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn deterministic(mut self, yes: bool) -> Self {
        self.deterministic = yes;
        self
    }

    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(RankError::Config(format!(
                "discount must lie in (0, 1), got {}",
                self.discount
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(RankError::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(RankError::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// `‖x_k − x_{k−1}‖₁`
    pub l1_residual: f64,
    /// `‖x_k − x*‖₁ / ‖x*‖₁` against the supplied reference, if any.
    pub rel_error: Option<f64>,
    /// PageRank only: mass restored by the rank-one correction.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Relative error of the starting vector against the reference.
    pub initial_rel_error: Option<f64>,
}

impl ConvergenceTrace {
    /// Relative error after `k` iterations (`k = 0` is the starting vector).
    pub fn rel_error_at(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return self.initial_rel_error;
        }
        self.records.get(k - 1).and_then(|r| r.rel_error)
    }
}

/// `‖x − reference‖₁ / ‖reference‖₁`, or the absolute L1 distance when the
/// reference is zero.
pub fn relative_l1_error(x: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum();
    let norm: f64 = reference.iter().map(|v| v.abs()).sum();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(IterationConfig::new(0.85).validate().is_ok());
        assert!(IterationConfig::new(0.0).validate().is_err());
        assert!(IterationConfig::new(1.0).validate().is_err());
        assert!(IterationConfig::new(f64::NAN).validate().is_err());
        assert!(IterationConfig::new(0.5).tolerance(0.0).validate().is_err());
        assert!(IterationConfig::new(0.5)
            .max_iterations(0)
            .validate()
            .is_err());
    }

    #[test]
    fn compensated_sum_of_uniform_distribution() {
        let n = 1_000_003;
        let s = compensated_sum(std::iter::repeat_n(1.0 / n as f64, n));
        assert!((s - 1.0).abs() < 1e-15);
    }
}
