use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GraphError, LinkGraph};

/// A set of node and edge insertions/deletions over external ids.
///
/// Removing a node requires listing every edge incident to it in
/// `removed_edges`; deltas are self-describing and can be inverted without
/// reference to the base graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub added_nodes: BTreeSet<u64>,
    pub removed_nodes: BTreeSet<u64>,
    pub added_edges: BTreeSet<(u64, u64)>,
    pub removed_edges: BTreeSet<(u64, u64)>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.added_nodes.is_empty()
            && self.removed_nodes.is_empty()
            && self.added_edges.is_empty()
            && self.removed_edges.is_empty()
    }

    pub fn add_edge(mut self, src: u64, dst: u64) -> Self {
        self.added_edges.insert((src, dst));
        self
    }

    pub fn remove_edge(mut self, src: u64, dst: u64) -> Self {
        self.removed_edges.insert((src, dst));
        self
    }

    pub fn add_node(mut self, id: u64) -> Self {
        self.added_nodes.insert(id);
        self
    }

    pub fn remove_node(mut self, id: u64) -> Self {
        self.removed_nodes.insert(id);
        self
    }

    /// The delta that undoes `self`.
    pub fn inverse(&self) -> GraphDelta {
        GraphDelta {
            added_nodes: self.removed_nodes.clone(),
            removed_nodes: self.added_nodes.clone(),
            added_edges: self.removed_edges.clone(),
            removed_edges: self.added_edges.clone(),
        }
    }

    /// Validates the delta against `g`, collecting every offender.
    pub fn validate(&self, g: &LinkGraph) -> Result<(), GraphError> {
        let mut offenders = Vec::new();
        for &id in &self.removed_nodes {
            if !g.contains_node(id) {
                offenders.push(format!("removed node {id} not in graph"));
            }
        }
        for &id in &self.added_nodes {
            if g.contains_node(id) {
                offenders.push(format!("added node {id} already in graph"));
            }
            if self.removed_nodes.contains(&id) {
                offenders.push(format!("node {id} both added and removed"));
            }
        }
        for &(s, d) in &self.removed_edges {
            if !g.has_edge(s, d) {
                offenders.push(format!("removed edge ({s},{d}) not in graph"));
            }
        }
        for &(s, d) in &self.added_edges {
            if g.has_edge(s, d) {
                offenders.push(format!("added edge ({s},{d}) already in graph"));
            }
            if self.removed_edges.contains(&(s, d)) {
                offenders.push(format!("edge ({s},{d}) both added and removed"));
            }
            for end in [s, d] {
                let present = (g.contains_node(end) && !self.removed_nodes.contains(&end))
                    || self.added_nodes.contains(&end);
                if !present {
                    offenders.push(format!(
                        "added edge ({s},{d}) references unknown node {end}"
                    ));
                }
            }
        }
        for &id in &self.removed_nodes {
            let Some(i) = g.internal_index(id) else {
                continue;
            };
            let incident = g
                .successors(i)
                .iter()
                .map(|&d| (id, g.external_id(d)))
                .chain(g.predecessors(i).iter().map(|&s| (g.external_id(s), id)));
            for e in incident {
                if !self.removed_edges.contains(&e) {
                    offenders.push(format!(
                        "edge ({},{}) incident to removed node {id} not listed in removed_edges",
                        e.0, e.1
                    ));
                }
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(GraphError::InvalidDelta { offenders })
        }
    }
}

impl LinkGraph {
    /// Applies a validated delta, returning a fresh snapshot. Surviving nodes
    /// keep their external ids.
    pub fn apply_delta(&self, d: &GraphDelta) -> Result<LinkGraph, GraphError> {
        d.validate(self)?;
        let nodes = self
            .external_ids()
            .iter()
            .copied()
            .filter(|id| !d.removed_nodes.contains(id))
            .chain(d.added_nodes.iter().copied());
        let edges = self
            .external_edges()
            .filter(|e| !d.removed_edges.contains(e))
            .chain(d.added_edges.iter().copied());
        Ok(LinkGraph::from_edges(
            nodes.collect::<Vec<_>>(),
            edges.collect::<Vec<_>>(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_edge_closes_cycle() {
        let g = LinkGraph::from_edges([], [(0, 1)]);
        let h = g
            .apply_delta(&GraphDelta::default().add_edge(1, 0))
            .unwrap();
        assert_eq!(h, LinkGraph::from_edges([], [(0, 1), (1, 0)]));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn removed_node_requires_incident_edges() {
        let g = LinkGraph::from_edges([], [(0, 1), (2, 3)]);
        let bare = GraphDelta::default().remove_node(3);
        match g.apply_delta(&bare) {
            Err(GraphError::InvalidDelta { offenders }) => {
                assert_eq!(offenders.len(), 1);
                assert!(offenders[0].contains("(2,3)"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        let h = g.apply_delta(&bare.remove_edge(2, 3)).unwrap();
        assert_eq!(h.edge_set(), [(0, 1)].into_iter().collect());
        assert_eq!(h.node_set(), [0, 1, 2].into_iter().collect());
        assert!(h.is_dangling(h.internal_index(2).unwrap()));
    }

    #[test]
    fn unknown_references_are_listed() {
        let g = LinkGraph::from_edges([], [(0, 1)]);
        let d = GraphDelta::default()
            .remove_edge(1, 0)
            .add_edge(0, 1)
            .add_edge(0, 9)
            .remove_node(5);
        let Err(GraphError::InvalidDelta { offenders }) = d.validate(&g) else {
            panic!("expected invalid delta");
        };
        assert_eq!(offenders.len(), 4, "{offenders:?}");
    }

    #[test]
    fn added_nodes_can_carry_edges() {
        let g = LinkGraph::from_edges([], [(0, 1)]);
        let d = GraphDelta::default()
            .add_node(7)
            .add_edge(7, 0)
            .add_edge(1, 7);
        let h = g.apply_delta(&d).unwrap();
        assert_eq!(h.node_count(), 3);
        let back = h.apply_delta(&d.inverse()).unwrap();
        assert_eq!(back, g);
    }

    fn graph_and_delta() -> impl proptest::strategy::Strategy<Value = (LinkGraph, GraphDelta)> {
        use proptest::prelude::*;
        (
            prop::collection::vec((0u64..15, 0u64..15), 1..60),
            prop::collection::vec((0u64..20, 0u64..20), 0..20),
            prop::collection::vec(any::<bool>(), 60),
            prop::collection::vec(0u64..15, 0..3),
        )
            .prop_map(|(edges, extra, drop, doomed)| {
                let g = LinkGraph::from_edges([], edges);
                let mut d = GraphDelta::default();
                for id in doomed.into_iter().filter(|id| g.contains_node(*id)) {
                    d = d.remove_node(id);
                }
                for ((s, t), drop) in g.external_edges().zip(drop) {
                    if drop || d.removed_nodes.contains(&s) || d.removed_nodes.contains(&t) {
                        d = d.remove_edge(s, t);
                    }
                }
                for (s, t) in extra {
                    let gone = |id: u64| d.removed_nodes.contains(&id);
                    if g.has_edge(s, t) || gone(s) || gone(t) {
                        continue;
                    }
                    for id in [s, t] {
                        if !g.contains_node(id) {
                            d = d.add_node(id);
                        }
                    }
                    d = d.add_edge(s, t);
                }
                (g, d)
            })
    }

    proptest::proptest! {
        #[test]
        fn inverse_restores_the_snapshot((g, d) in graph_and_delta()) {
            let h = g.apply_delta(&d).unwrap();
            proptest::prop_assert!(h.transpose_check());
            let back = h.apply_delta(&d.inverse()).unwrap();
            proptest::prop_assert_eq!(back.node_set(), g.node_set());
            proptest::prop_assert_eq!(back.edge_set(), g.edge_set());
        }
    }
}
