use std::collections::VecDeque;

use super::{LinkGraph, NodeIndex};

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

impl LinkGraph {
    /// Component label per internal index; labels are dense and numbered in
    /// order of each component's smallest member.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut ds = DisjointSet::new(n);
        for (s, d) in self.edges() {
            ds.union(s, d);
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = ds.find(i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }

    /// Weakly connected components as sorted lists of external ids, ordered by
    /// their smallest member.
    pub fn weakly_connected_components(&self) -> Vec<Vec<u64>> {
        let labels = self.component_labels();
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut classes = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            classes[l].push(self.external_id(i));
        }
        classes
    }

    /// Nodes reachable from `start` along forward edges, `start` included.
    pub fn forward_reachable(&self, start: NodeIndex) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in self.successors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphDelta;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Boolean transitive closure of the symmetrized adjacency.
    fn closure_classes(g: &LinkGraph) -> Vec<Vec<u64>> {
        let n = g.node_count();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for (s, d) in g.edges() {
            reach[s][d] = true;
            reach[d][s] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        let mut out: Vec<Vec<u64>> = Vec::new();
        let mut assigned = vec![false; n];
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let class: Vec<u64> = (0..n)
                .filter(|&j| reach[i][j])
                .inspect(|&j| assigned[j] = true)
                .map(|j| g.external_id(j))
                .collect();
            out.push(class);
        }
        out
    }

    #[test]
    fn two_components() {
        let g = LinkGraph::from_edges([], [(0, 1), (2, 3)]);
        assert_eq!(
            g.weakly_connected_components(),
            vec![vec![0, 1], vec![2, 3]]
        );
    }

    #[test]
    fn cycle_is_one_component() {
        let g = LinkGraph::from_edges([], [(0, 1), (1, 0)]);
        assert_eq!(g.weakly_connected_components().len(), 1);
    }

    #[test]
    fn matches_closure_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 50u64;
            let m = rng.gen_range(0..60);
            let edges: Vec<(u64, u64)> = (0..m)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            let g = LinkGraph::from_edges(0..n, edges);
            assert_eq!(g.weakly_connected_components(), closure_classes(&g));
        }
    }

    #[test]
    fn bridge_edge_merges_components() {
        // two components: {1,2,3,4,5} and {6,7,8}
        let g = LinkGraph::from_edges(
            [],
            [
                (1, 2),
                (2, 3),
                (1, 4),
                (4, 5),
                (5, 3),
                (6, 7),
                (7, 8),
                (8, 6),
            ],
        );
        assert_eq!(closure_classes(&g).len(), 2);
        assert_eq!(g.weakly_connected_components().len(), 2);
        let h = g
            .apply_delta(&GraphDelta::default().add_edge(5, 6))
            .unwrap();
        assert_eq!(closure_classes(&h).len(), 1);
        assert_eq!(h.weakly_connected_components().len(), 1);
    }

    #[test]
    fn forward_reachability() {
        let g = LinkGraph::from_edges([], [(0, 1), (1, 2), (3, 1)]);
        assert_eq!(g.forward_reachable(1), vec![false, true, true, false]);
        assert_eq!(g.forward_reachable(3), vec![false, true, true, true]);
    }
}
