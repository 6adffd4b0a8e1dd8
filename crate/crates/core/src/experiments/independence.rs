//! Score stability under disjoint growth, external changes to altruistic
//! subgraphs, and single-link deletions.

use std::collections::BTreeSet;

use crate::graph::{GraphDelta, LinkGraph};
use crate::ranking::{
    pagerank, reinforcement_rank, uniform_distribution, IterationConfig, NodeValues, PolicyRule,
    RankError,
};

use super::{max_abs_diff, ExperimentError};

/// Solver settings shared by the checks. The same discount is used as γ for
/// reinforcement ranking and as c for PageRank (uniform teleportation).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub discount: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub policy: PolicyRule,
    pub rewards: NodeValues,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            discount: 0.85,
            tolerance: 1e-12,
            max_iterations: 100_000,
            policy: PolicyRule::Uniform,
            rewards: NodeValues::constant(1.0),
        }
    }
}

impl CheckConfig {
    fn iteration(&self) -> IterationConfig {
        IterationConfig::new(self.discount)
            .tolerance(self.tolerance)
            .max_iterations(self.max_iterations)
            .deterministic(true)
    }

    fn rr(&self, g: &LinkGraph) -> Result<Vec<f64>, RankError> {
        let p = self.policy.build(g)?;
        let r = self.rewards.rewards(g)?;
        let (s, trace) = reinforcement_rank(g, &p, &r, &self.iteration())?;
        if !trace.converged {
            return Err(RankError::Config(format!(
                "reinforcement ranking did not converge in {} iterations",
                self.max_iterations
            )));
        }
        Ok(s.values)
    }

    fn pagerank(&self, g: &LinkGraph) -> Result<Vec<f64>, RankError> {
        let v = uniform_distribution(g.node_count());
        let (s, trace) = pagerank(g, &self.iteration(), &v, None)?;
        if !trace.converged {
            return Err(RankError::Config(format!(
                "PageRank did not converge in {} iterations",
                self.max_iterations
            )));
        }
        Ok(s.values)
    }
}

/// Scores of `sub`'s nodes looked up in a solution over `whole`.
fn restrict(whole: &LinkGraph, scores: &[f64], ids: &[u64]) -> Vec<f64> {
    ids.iter()
        .map(|id| {
            scores[whole
                .internal_index(*id)
                .expect("id present in both graphs")]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisjointReport {
    /// L∞ gap between union scores and the concatenated per-graph scores.
    pub rr_discrepancy: f64,
    pub pagerank_discrepancy: f64,
}

/// Solves both methods on `g1`, `g2` and their disjoint union and compares
/// the union scores against the per-component ones.
pub fn check_disjoint_independence(
    g1: &LinkGraph,
    g2: &LinkGraph,
    cfg: &CheckConfig,
) -> Result<DisjointReport, ExperimentError> {
    let union = g1.disjoint_union(g2)?;
    let gap = |solve: &dyn Fn(&LinkGraph) -> Result<Vec<f64>, RankError>| {
        let whole = solve(&union)?;
        let mut worst = 0.0f64;
        for part in [g1, g2] {
            let local = solve(part)?;
            let global = restrict(&union, &whole, part.external_ids());
            worst = worst.max(max_abs_diff(local.into_iter().zip(global)));
        }
        Ok::<_, RankError>(worst)
    };
    Ok(DisjointReport {
        rr_discrepancy: gap(&|g| cfg.rr(g))?,
        pagerank_discrepancy: gap(&|g| cfg.pagerank(g))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltruisticReport {
    /// No link enters the set from outside, before or after the delta.
    pub altruism_preserving: bool,
    /// Links entering the set from outside, in either graph.
    pub incoming_links: Vec<(u64, u64)>,
    /// Set members whose out-links the delta changes; their policy rows are
    /// renormalized.
    pub modified_rows: Vec<u64>,
    pub rr_max_change: f64,
    pub pagerank_max_change: f64,
}

fn incoming(g: &LinkGraph, set: &BTreeSet<u64>) -> Vec<(u64, u64)> {
    g.external_edges()
        .filter(|(s, d)| !set.contains(s) && set.contains(d))
        .collect()
}

/// Compares scores of an altruistic node set (out-links only, no in-links
/// from the rest of the graph) before and after `delta`.
pub fn check_altruistic_independence(
    g: &LinkGraph,
    set: &BTreeSet<u64>,
    delta: &GraphDelta,
    cfg: &CheckConfig,
) -> Result<AltruisticReport, ExperimentError> {
    if let Some(id) = set.iter().find(|id| !g.contains_node(**id)) {
        return Err(ExperimentError::Input(format!("node {id} not in graph")));
    }
    if let Some(id) = set.iter().find(|id| delta.removed_nodes.contains(id)) {
        return Err(ExperimentError::Input(format!(
            "delta removes set member {id}"
        )));
    }
    let h = g.apply_delta(delta)?;
    let mut incoming_links = incoming(g, set);
    incoming_links.extend(incoming(&h, set));
    incoming_links.sort_unstable();
    incoming_links.dedup();
    let modified_rows: BTreeSet<u64> = delta
        .added_edges
        .iter()
        .chain(&delta.removed_edges)
        .map(|&(s, _)| s)
        .filter(|s| set.contains(s))
        .collect();

    let ids: Vec<u64> = set.iter().copied().collect();
    let change = |before: Vec<f64>, after: Vec<f64>| {
        max_abs_diff(
            restrict(g, &before, &ids)
                .into_iter()
                .zip(restrict(&h, &after, &ids)),
        )
    };
    Ok(AltruisticReport {
        altruism_preserving: incoming_links.is_empty(),
        incoming_links,
        modified_rows: modified_rows.into_iter().collect(),
        rr_max_change: change(cfg.rr(g)?, cfg.rr(&h)?),
        pagerank_max_change: change(cfg.pagerank(g)?, cfg.pagerank(&h)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeChange {
    pub id: u64,
    /// Reinforcement score after deletion minus before.
    pub change: f64,
    pub pagerank_change: f64,
    /// Forward-reachable from the deleted link's source.
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    pub changes: Vec<NodeChange>,
    pub max_change_reachable: f64,
    pub max_change_unreachable: f64,
    pub pagerank_max_change_unreachable: f64,
}

/// Deletes the link `src → dst`, rebuilds the policy and reports per-node
/// score changes split by forward reachability from `src`. Reachability is
/// taken from the source, not the target: the deletion renormalizes the
/// source's remaining out-links, so successors along its other links move
/// too.
pub fn link_deletion_locality(
    g: &LinkGraph,
    edge: (u64, u64),
    cfg: &CheckConfig,
) -> Result<LocalityReport, ExperimentError> {
    if !g.has_edge(edge.0, edge.1) {
        return Err(ExperimentError::Input(format!(
            "edge ({},{}) not in graph",
            edge.0, edge.1
        )));
    }
    let h = g.apply_delta(&GraphDelta::default().remove_edge(edge.0, edge.1))?;
    let src = g.internal_index(edge.0).expect("edge source present");
    let reach = g.forward_reachable(src);
    let (before, after) = (cfg.rr(g)?, cfg.rr(&h)?);
    let (pr_before, pr_after) = (cfg.pagerank(g)?, cfg.pagerank(&h)?);

    // node sets are identical, so internal indices line up
    let changes: Vec<NodeChange> = (0..g.node_count())
        .map(|i| NodeChange {
            id: g.external_id(i),
            change: after[i] - before[i],
            pagerank_change: pr_after[i] - pr_before[i],
            reachable: reach[i],
        })
        .collect();
    let max_of = |pick: &dyn Fn(&NodeChange) -> Option<f64>| {
        changes
            .iter()
            .filter_map(pick)
            .map(f64::abs)
            .fold(0.0, f64::max)
    };
    Ok(LocalityReport {
        max_change_reachable: max_of(&|c| c.reachable.then_some(c.change)),
        max_change_unreachable: max_of(&|c| (!c.reachable).then_some(c.change)),
        pagerank_max_change_unreachable: max_of(&|c| (!c.reachable).then_some(c.pagerank_change)),
        changes,
    })
}
