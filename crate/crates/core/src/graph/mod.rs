//! Immutable link-graph snapshots.
//!
//! A [`LinkGraph`] stores both the forward adjacency (out-links, used to
//! build policies) and the reverse adjacency (in-links, consumed by every
//! iteration) in compressed sparse row form. Nodes carry an arbitrary
//! external `u64` id; internal indices are dense in `[0, N)` and are assigned
//! in ascending external-id order, so two snapshots over the same id set
//! share the same internal layout.

mod components;
mod delta;
mod io;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub use delta::GraphDelta;
pub use io::{
    load_graph, load_graph_with_manifest, parse_edge_list, parse_node_manifest, read_id_map,
    write_edge_list, write_id_map, write_node_manifest,
};

/// Internal dense node index.
pub type NodeIndex = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph has no nodes")]
    Empty,
    #[error("invalid delta: {}", .offenders.join("; "))]
    InvalidDelta { offenders: Vec<String> },
    #[error("unknown node id {0}")]
    UnknownNode(u64),
}

/// Immutable directed graph snapshot with forward and reverse CSR adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkGraph {
    /// internal index -> external id, strictly ascending
    ids: Vec<u64>,
    index: HashMap<u64, NodeIndex>,
    fwd_offsets: Vec<usize>,
    fwd_targets: Vec<NodeIndex>,
    rev_offsets: Vec<usize>,
    rev_sources: Vec<NodeIndex>,
}

impl LinkGraph {
    /// Builds a snapshot from a node set and an edge list over external ids.
    ///
    /// Every endpoint of an edge becomes a node even if it is not listed in
    /// `nodes`. Duplicate edges collapse to a single link; self-loops are kept.
    pub fn from_edges<N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = u64>,
        E: IntoIterator<Item = (u64, u64)>,
    {
        let edges: BTreeSet<(u64, u64)> = edges.into_iter().collect();
        let mut id_set: BTreeSet<u64> = nodes.into_iter().collect();
        for &(s, d) in &edges {
            id_set.insert(s);
            id_set.insert(d);
        }
        let ids: Vec<u64> = id_set.into_iter().collect();
        let index: HashMap<u64, NodeIndex> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let n = ids.len();
        // Ascending external ids map to ascending internal indices, so the
        // BTreeSet order is already sorted by (src, dst) internally.
        let mut fwd_offsets = vec![0usize; n + 1];
        let mut fwd_targets = Vec::with_capacity(edges.len());
        for &(s, d) in &edges {
            fwd_offsets[index[&s] + 1] += 1;
            fwd_targets.push(index[&d]);
        }
        for i in 0..n {
            fwd_offsets[i + 1] += fwd_offsets[i];
        }

        let (rev_offsets, rev_sources) = transpose(n, &fwd_offsets, &fwd_targets);
        let g = Self {
            ids,
            index,
            fwd_offsets,
            fwd_targets,
            rev_offsets,
            rev_sources,
        };
        assert!(
            g.transpose_check(),
            "reverse adjacency is not the transpose"
        );
        g
    }

    /// Builds a snapshot directly from internal adjacency lists.
    pub fn from_adjacency(successors: &[Vec<NodeIndex>]) -> Self {
        let n = successors.len();
        Self::from_edges(
            0..n as u64,
            successors
                .iter()
                .enumerate()
                .flat_map(|(s, succ)| succ.iter().map(move |&d| (s as u64, d as u64))),
        )
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.fwd_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// External ids indexed by internal index.
    pub fn external_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn external_id(&self, i: NodeIndex) -> u64 {
        self.ids[i]
    }

    pub fn internal_index(&self, id: u64) -> Option<NodeIndex> {
        self.index.get(&id).copied()
    }

    pub fn contains_node(&self, id: u64) -> bool {
        self.index.contains_key(&id)
    }

    /// Sorted successors of `i`.
    pub fn successors(&self, i: NodeIndex) -> &[NodeIndex] {
        &self.fwd_targets[self.fwd_offsets[i]..self.fwd_offsets[i + 1]]
    }

    /// Sorted predecessors of `i`.
    pub fn predecessors(&self, i: NodeIndex) -> &[NodeIndex] {
        &self.rev_sources[self.rev_offsets[i]..self.rev_offsets[i + 1]]
    }

    pub fn out_degree(&self, i: NodeIndex) -> usize {
        self.fwd_offsets[i + 1] - self.fwd_offsets[i]
    }

    pub fn in_degree(&self, i: NodeIndex) -> usize {
        self.rev_offsets[i + 1] - self.rev_offsets[i]
    }

    pub fn is_dangling(&self, i: NodeIndex) -> bool {
        self.out_degree(i) == 0
    }

    pub fn dangling_mask(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|i| self.is_dangling(i))
            .collect()
    }

    /// Offsets into the forward edge array; edge slot `k` of node `i` lives in
    /// `forward_offsets()[i]..forward_offsets()[i + 1]`.
    pub fn forward_offsets(&self) -> &[usize] {
        &self.fwd_offsets
    }

    pub fn reverse_offsets(&self) -> &[usize] {
        &self.rev_offsets
    }

    pub fn has_edge(&self, src: u64, dst: u64) -> bool {
        match (self.internal_index(src), self.internal_index(dst)) {
            (Some(s), Some(d)) => self.successors(s).binary_search(&d).is_ok(),
            _ => false,
        }
    }

    /// All edges as internal index pairs, sorted by (src, dst).
    pub fn edges(&self) -> impl Iterator<Item = (NodeIndex, NodeIndex)> + '_ {
        (0..self.node_count()).flat_map(move |s| self.successors(s).iter().map(move |&d| (s, d)))
    }

    /// All edges as external id pairs, sorted.
    pub fn external_edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.edges().map(|(s, d)| (self.ids[s], self.ids[d]))
    }

    /// Checks that the reverse adjacency is exactly the transpose of the
    /// forward adjacency.
    pub fn transpose_check(&self) -> bool {
        let n = self.node_count();
        if self.rev_offsets.len() != n + 1
            || self.fwd_offsets.len() != n + 1
            || self.rev_sources.len() != self.fwd_targets.len()
        {
            return false;
        }
        let mut seen = vec![0usize; n];
        for (s, d) in self.edges() {
            if d >= n || self.predecessors(d).binary_search(&s).is_err() {
                return false;
            }
            seen[d] += 1;
        }
        (0..n).all(|d| {
            let preds = self.predecessors(d);
            preds.len() == seen[d] && preds.windows(2).all(|w| w[0] < w[1])
        })
    }

    /// Node set as external ids.
    pub fn node_set(&self) -> BTreeSet<u64> {
        self.ids.iter().copied().collect()
    }

    /// Edge set as external id pairs.
    pub fn edge_set(&self) -> BTreeSet<(u64, u64)> {
        self.external_edges().collect()
    }

    /// Disjoint union of two snapshots over disjoint id sets.
    pub fn disjoint_union(&self, other: &LinkGraph) -> Result<LinkGraph, GraphError> {
        let overlap: Vec<String> = other
            .ids
            .iter()
            .filter(|id| self.contains_node(**id))
            .map(|id| format!("node {id} present in both graphs"))
            .collect();
        if !overlap.is_empty() {
            return Err(GraphError::InvalidDelta { offenders: overlap });
        }
        Ok(LinkGraph::from_edges(
            self.ids.iter().chain(other.ids.iter()).copied(),
            self.external_edges().chain(other.external_edges()),
        ))
    }

    #[cfg(test)]
    pub(crate) fn corrupt_reverse_for_test(&mut self) {
        if let Some(first) = self.rev_sources.first_mut() {
            *first = (*first + 1) % self.ids.len();
        } else {
            self.rev_offsets.push(0);
        }
    }
}

fn transpose(n: usize, offsets: &[usize], targets: &[NodeIndex]) -> (Vec<usize>, Vec<NodeIndex>) {
    let mut rev_offsets = vec![0usize; n + 1];
    for &d in targets {
        rev_offsets[d + 1] += 1;
    }
    for i in 0..n {
        rev_offsets[i + 1] += rev_offsets[i];
    }
    let mut cursor = rev_offsets.clone();
    let mut sources = vec![0; targets.len()];
    // sources are visited in ascending order, so each reverse list comes out sorted
    for s in 0..n {
        for &d in &targets[offsets[s]..offsets[s + 1]] {
            sources[cursor[d]] = s;
            cursor[d] += 1;
        }
    }
    (rev_offsets, sources)
}
