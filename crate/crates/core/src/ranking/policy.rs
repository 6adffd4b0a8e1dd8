use std::collections::BTreeMap;

use crate::graph::{LinkGraph, NodeIndex};

use super::{check_len, compensated_sum, RankError};

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Row-(sub)stochastic surfing policy over a graph's out-links.
///
/// Weights are stored twice: aligned with the forward adjacency (one slot per
/// out-link, for validation and inspection) and aligned with the reverse
/// adjacency (one slot per in-link, consumed by the reverse iteration).
/// Dangling nodes have empty rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n: usize,
    forward: Vec<f64>,
    reverse: Vec<f64>,
}

impl Policy {
    /// Uniform random surfer: each out-link of `i` gets `1/out_degree(i)`.
    pub fn uniform(g: &LinkGraph) -> Self {
        let forward = (0..g.node_count())
            .flat_map(|i| {
                let d = g.out_degree(i);
                std::iter::repeat_n(1.0 / d as f64, d)
            })
            .collect();
        Self::assemble(g, forward)
    }

    /// Builds a policy from per-out-link weights laid out like the forward
    /// adjacency. Rows must be nonnegative and sum to one.
    pub fn from_forward_weights(g: &LinkGraph, weights: Vec<f64>) -> Result<Self, RankError> {
        check_len("policy weights", g.edge_count(), weights.len())?;
        let offs = g.forward_offsets();
        for i in 0..g.node_count() {
            let row = &weights[offs[i]..offs[i + 1]];
            if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                return Err(RankError::Config(format!(
                    "policy weight {w} on node {} is not a finite nonnegative number",
                    g.external_id(i)
                )));
            }
            if !row.is_empty() {
                let sum = compensated_sum(row.iter().copied());
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(RankError::Config(format!(
                        "policy row of node {} sums to {sum}",
                        g.external_id(i)
                    )));
                }
            }
        }
        Ok(Self::assemble(g, weights))
    }

    /// Normalizes positive per-link preferences row by row.
    pub fn from_preferences(
        g: &LinkGraph,
        mut pref: impl FnMut(NodeIndex, NodeIndex) -> f64,
    ) -> Result<Self, RankError> {
        let mut weights = Vec::with_capacity(g.edge_count());
        for i in 0..g.node_count() {
            let row: Vec<f64> = g.successors(i).iter().map(|&j| pref(i, j)).collect();
            if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(RankError::Config(format!(
                    "link preference {w} on node {} must be finite and positive",
                    g.external_id(i)
                )));
            }
            let total: f64 = row.iter().sum();
            weights.extend(row.iter().map(|w| w / total));
        }
        Ok(Self::assemble(g, weights))
    }

    fn assemble(g: &LinkGraph, forward: Vec<f64>) -> Self {
        let n = g.node_count();
        let mut cursor = g.reverse_offsets()[..n].to_vec();
        let mut reverse = vec![0.0; forward.len()];
        let offs = g.forward_offsets();
        for s in 0..n {
            for (k, &d) in g.successors(s).iter().enumerate() {
                reverse[cursor[d]] = forward[offs[s] + k];
                cursor[d] += 1;
            }
        }
        Self {
            n,
            forward,
            reverse,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.forward.len()
    }

    /// Weights aligned with the forward adjacency.
    pub fn forward_weights(&self) -> &[f64] {
        &self.forward
    }

    /// Weights aligned with the reverse adjacency: slot `k` of node `s`'s
    /// predecessor list holds `P(p, s)`.
    pub fn reverse_weights(&self) -> &[f64] {
        &self.reverse
    }

    pub fn row_sum(&self, g: &LinkGraph, i: NodeIndex) -> f64 {
        let offs = g.forward_offsets();
        self.forward[offs[i]..offs[i + 1]].iter().sum()
    }

    /// `P(i, j)`, zero when there is no link.
    pub fn weight(&self, g: &LinkGraph, i: NodeIndex, j: NodeIndex) -> f64 {
        match g.successors(i).binary_search(&j) {
            Ok(k) => self.forward[g.forward_offsets()[i] + k],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn check_against(&self, g: &LinkGraph) -> Result<(), RankError> {
        check_len("policy nodes", g.node_count(), self.n)?;
        check_len("policy edges", g.edge_count(), self.forward.len())
    }
}

pub fn uniform_policy(g: &LinkGraph) -> Policy {
    Policy::uniform(g)
}

/// Policy construction rule that can be re-applied to any snapshot, so a
/// policy can be rebuilt after the graph changes.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PolicyRule {
    #[default]
    Uniform,
    /// Positive per-link preferences keyed by external `(src, dst)`;
    /// unlisted links get preference 1. Rows are normalized on build.
    Preferences(BTreeMap<(u64, u64), f64>),
}

impl PolicyRule {
    pub fn build(&self, g: &LinkGraph) -> Result<Policy, RankError> {
        match self {
            PolicyRule::Uniform => Ok(Policy::uniform(g)),
            PolicyRule::Preferences(map) => Policy::from_preferences(g, |i, j| {
                map.get(&(g.external_id(i), g.external_id(j)))
                    .copied()
                    .unwrap_or(1.0)
            }),
        }
    }
}

/// Intrinsic per-node reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    values: Vec<f64>,
}

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self, RankError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RankError::Config(format!(
                "reward at index {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self, RankError> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self, RankError> {
        Self::new(self.values.iter().map(|v| alpha * v).collect())
    }
}

pub fn uniform_rewards(g: &LinkGraph, value: f64) -> Result<RewardVector, RankError> {
    RewardVector::uniform(g.node_count(), value)
}

/// Sparse per-node values keyed by external id with a default for absent
/// nodes. Resolves against any snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    pub default: f64,
    pub values: BTreeMap<u64, f64>,
}

impl NodeValues {
    pub fn constant(default: f64) -> Self {
        Self {
            default,
            values: BTreeMap::new(),
        }
    }

    pub fn with_values(default: f64, values: BTreeMap<u64, f64>) -> Self {
        Self { default, values }
    }

    pub fn resolve(&self, g: &LinkGraph) -> Vec<f64> {
        g.external_ids()
            .iter()
            .map(|id| self.values.get(id).copied().unwrap_or(self.default))
            .collect()
    }

    pub fn rewards(&self, g: &LinkGraph) -> Result<RewardVector, RankError> {
        RewardVector::new(self.resolve(g))
    }

    /// Resolves and normalizes to a probability vector.
    pub fn distribution(&self, g: &LinkGraph) -> Result<Vec<f64>, RankError> {
        let raw = self.resolve(g);
        if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(RankError::Config(
                "distribution weights must be finite and nonnegative".into(),
            ));
        }
        let total = compensated_sum(raw.iter().copied());
        if total.is_nan() || total <= 0.0 {
            return Err(RankError::Config("distribution weights sum to zero".into()));
        }
        Ok(raw.into_iter().map(|v| v / total).collect())
    }
}
