use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphDelta, LinkGraph};

use super::ExperimentError;

/// Percent changes for one snapshot-to-snapshot step, relative to the node
/// and link counts of the snapshot the step starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub add_nodes_pct: f64,
    pub del_nodes_pct: f64,
    pub add_links_pct: f64,
    pub del_links_pct: f64,
}

impl StepSpec {
    pub fn new(add_nodes: f64, del_nodes: f64, add_links: f64, del_links: f64) -> Self {
        Self {
            add_nodes_pct: add_nodes,
            del_nodes_pct: del_nodes,
            add_links_pct: add_links,
            del_links_pct: del_links,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub seed: u64,
    pub base_nodes: usize,
    /// Average out-degree of the base graph.
    pub base_edge_factor: f64,
    #[serde(default)]
    pub steps: Vec<StepSpec>,
}

impl EvolutionSpec {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.base_nodes == 0 {
            return Err(ExperimentError::Spec("base_nodes must be positive".into()));
        }
        if !(self.base_edge_factor.is_finite() && self.base_edge_factor >= 0.0) {
            return Err(ExperimentError::Spec(
                "base_edge_factor must be nonnegative".into(),
            ));
        }
        for (i, s) in self.steps.iter().enumerate() {
            for pct in [
                s.add_nodes_pct,
                s.del_nodes_pct,
                s.add_links_pct,
                s.del_links_pct,
            ] {
                if !(0.0..=100.0).contains(&pct) {
                    return Err(ExperimentError::Spec(format!(
                        "step {i}: percentage {pct} outside [0, 100]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A sequence of snapshots; `deltas[i]` turns `snapshots[i]` into
/// `snapshots[i + 1]`.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub snapshots: Vec<LinkGraph>,
    pub deltas: Vec<GraphDelta>,
}

fn count(pct: f64, of: usize) -> usize {
    (pct / 100.0 * of as f64).round() as usize
}

/// Samples targets with probability proportional to `in_degree + 1`.
struct TargetPool {
    entries: Vec<u64>,
}

impl TargetPool {
    fn new(nodes: &BTreeSet<u64>, edges: &BTreeSet<(u64, u64)>) -> Self {
        let mut entries: Vec<u64> = nodes.iter().copied().collect();
        entries.extend(edges.iter().map(|&(_, d)| d));
        Self { entries }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        self.entries[rng.gen_range(0..self.entries.len())]
    }

    fn record(&mut self, target: u64) {
        self.entries.push(target);
    }

    fn add_node(&mut self, id: u64) {
        self.entries.push(id);
    }
}

const MAX_ATTEMPTS_PER_EDGE: usize = 1000;

/// Draws `wanted` new links with uniform sources from `sources` and
/// preferential targets, skipping links in `forbidden` or already drawn.
fn draw_links(
    rng: &mut ChaCha8Rng,
    sources: &[u64],
    pool: &mut TargetPool,
    wanted: usize,
    forbidden: &dyn Fn(&(u64, u64)) -> bool,
    drawn: &mut BTreeSet<(u64, u64)>,
) -> Result<(), ExperimentError> {
    let mut made = 0;
    let mut attempts = 0;
    while made < wanted {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_EDGE * (wanted + 1) {
            return Err(ExperimentError::Spec(format!(
                "could not place {wanted} new links; graph too dense"
            )));
        }
        let e = (sources[rng.gen_range(0..sources.len())], pool.sample(rng));
        if forbidden(&e) || drawn.contains(&e) {
            continue;
        }
        drawn.insert(e);
        pool.record(e.1);
        made += 1;
    }
    Ok(())
}

/// Generates a base graph and one snapshot per step. Deterministic given
/// the seed. Each step's realized add/delete counts equal the requested
/// percentages rounded to the nearest item; links removed along with
/// deleted nodes count towards the link deletions.
pub fn generate_evolution(spec: &EvolutionSpec) -> Result<Evolution, ExperimentError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let nodes: BTreeSet<u64> = (0..spec.base_nodes as u64).collect();
    let node_list: Vec<u64> = nodes.iter().copied().collect();
    let mut pool = TargetPool::new(&nodes, &BTreeSet::new());
    let mut edges = BTreeSet::new();
    let wanted = (spec.base_nodes as f64 * spec.base_edge_factor).round() as usize;
    draw_links(
        &mut rng,
        &node_list,
        &mut pool,
        wanted,
        &|_| false,
        &mut edges,
    )?;

    let mut current = LinkGraph::from_edges(nodes, edges);
    let mut next_id = spec.base_nodes as u64;
    let mut snapshots = vec![current.clone()];
    let mut deltas = Vec::new();

    for (step_no, step) in spec.steps.iter().enumerate() {
        let delta = evolve_step(
            &mut rng,
            &current,
            step,
            &mut next_id,
            spec.base_edge_factor,
        )
        .map_err(|e| match e {
            ExperimentError::Spec(m) => ExperimentError::Spec(format!("step {step_no}: {m}")),
            other => other,
        })?;
        current = current.apply_delta(&delta)?;
        snapshots.push(current.clone());
        deltas.push(delta);
    }
    Ok(Evolution { snapshots, deltas })
}

fn evolve_step(
    rng: &mut ChaCha8Rng,
    g: &LinkGraph,
    step: &StepSpec,
    next_id: &mut u64,
    edge_factor: f64,
) -> Result<GraphDelta, ExperimentError> {
    let n = g.node_count();
    let m = g.edge_count();
    let del_nodes = count(step.del_nodes_pct, n);
    let add_nodes = count(step.add_nodes_pct, n);
    let del_links = count(step.del_links_pct, m);
    let add_links = count(step.add_links_pct, m);
    if del_nodes >= n {
        return Err(ExperimentError::Spec("step would empty the graph".into()));
    }

    let mut delta = GraphDelta::default();

    // Node deletions, skipping nodes whose incident links would overrun the
    // link-deletion budget.
    let mut incident: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for (s, d) in g.external_edges() {
        incident.entry(s).or_default().push((s, d));
        incident.entry(d).or_default().push((s, d));
    }
    let mut order: Vec<u64> = g.external_ids().to_vec();
    order.shuffle(rng);
    for id in order {
        if delta.removed_nodes.len() == del_nodes {
            break;
        }
        let fresh: BTreeSet<(u64, u64)> = incident
            .get(&id)
            .map(|v| {
                v.iter()
                    .filter(|e| !delta.removed_edges.contains(e))
                    .copied()
                    .collect()
            })
            .unwrap_or_default();
        if delta.removed_edges.len() + fresh.len() > del_links {
            continue;
        }
        delta.removed_nodes.insert(id);
        delta.removed_edges.extend(fresh);
    }
    if delta.removed_nodes.len() < del_nodes {
        return Err(ExperimentError::Spec(format!(
            "cannot delete {del_nodes} nodes within a budget of {del_links} link deletions"
        )));
    }

    // Remaining link deletions among surviving links.
    let mut remaining: Vec<(u64, u64)> = g
        .external_edges()
        .filter(|e| !delta.removed_edges.contains(e))
        .collect();
    let extra = del_links.saturating_sub(delta.removed_edges.len());
    let (picked, _) = remaining.partial_shuffle(rng, extra);
    delta.removed_edges.extend(picked.iter().copied());

    // Node additions: each new node links out to preferentially chosen
    // targets, so in-degree stays skewed.
    let survivors: BTreeSet<u64> = g
        .external_ids()
        .iter()
        .copied()
        .filter(|id| !delta.removed_nodes.contains(id))
        .collect();
    let kept_edges: BTreeSet<(u64, u64)> = g
        .external_edges()
        .filter(|e| !delta.removed_edges.contains(e))
        .collect();
    let mut pool = TargetPool::new(&survivors, &kept_edges);
    for _ in 0..add_nodes {
        delta.added_nodes.insert(*next_id);
        pool.add_node(*next_id);
        *next_id += 1;
    }
    let per_node = add_links
        .checked_div(add_nodes)
        .map_or(0, |cap| cap.min(edge_factor.round() as usize));
    let mut added = BTreeSet::new();
    let removed = delta.removed_edges.clone();
    let forbidden = |e: &(u64, u64)| g.has_edge(e.0, e.1) || removed.contains(e);
    let new_nodes: Vec<u64> = delta.added_nodes.iter().copied().collect();
    for &id in &new_nodes {
        draw_links(rng, &[id], &mut pool, per_node, &forbidden, &mut added)?;
    }

    // Remaining link additions between any current nodes.
    let all: Vec<u64> = survivors.iter().copied().chain(new_nodes).collect();
    let rest = add_links - added.len();
    draw_links(rng, &all, &mut pool, rest, &forbidden, &mut added)?;
    delta.added_edges = added;
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(steps: Vec<StepSpec>) -> EvolutionSpec {
        EvolutionSpec {
            seed: 7,
            base_nodes: 300,
            base_edge_factor: 5.0,
            steps,
        }
    }

    #[test]
    fn no_steps_gives_base_graph() {
        let ev = generate_evolution(&spec(vec![])).unwrap();
        assert_eq!(ev.snapshots.len(), 1);
        assert!(ev.deltas.is_empty());
        assert_eq!(ev.snapshots[0].node_count(), 300);
        assert_eq!(ev.snapshots[0].edge_count(), 1500);
    }

    #[test]
    fn null_step_gives_empty_delta() {
        let ev = generate_evolution(&spec(vec![StepSpec::new(0.0, 0.0, 0.0, 0.0)])).unwrap();
        assert!(ev.deltas[0].is_empty());
        assert_eq!(ev.snapshots[0], ev.snapshots[1]);
    }

    #[test]
    fn same_seed_same_graphs() {
        let s = spec(vec![
            StepSpec::new(12.0, 4.0, 17.0, 8.0),
            StepSpec::new(49.0, 18.0, 65.0, 41.0),
        ]);
        let a = generate_evolution(&s).unwrap();
        let b = generate_evolution(&s).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.deltas, b.deltas);
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(
            generate_evolution(&other).unwrap().snapshots[0],
            a.snapshots[0]
        );
    }

    #[test]
    fn realized_percentages_match() {
        let steps = vec![
            StepSpec::new(12.0, 4.0, 17.0, 8.0),
            StepSpec::new(18.0, 5.0, 39.0, 20.0),
            StepSpec::new(49.0, 18.0, 65.0, 41.0),
        ];
        let ev = generate_evolution(&spec(steps.clone())).unwrap();
        for (i, (d, st)) in ev.deltas.iter().zip(&steps).enumerate() {
            let g = &ev.snapshots[i];
            let (n, m) = (g.node_count() as f64, g.edge_count() as f64);
            let within =
                |got: usize, pct: f64, of: f64| (got as f64 - pct / 100.0 * of).abs() <= 1.0;
            assert!(within(d.added_nodes.len(), st.add_nodes_pct, n));
            assert!(within(d.removed_nodes.len(), st.del_nodes_pct, n));
            assert!(within(d.added_edges.len(), st.add_links_pct, m));
            assert!(within(d.removed_edges.len(), st.del_links_pct, m));
        }
    }

    #[test]
    fn in_degree_is_skewed() {
        let ev = generate_evolution(&spec(vec![])).unwrap();
        let g = &ev.snapshots[0];
        let max_in = (0..g.node_count()).map(|i| g.in_degree(i)).max().unwrap();
        assert!(max_in > 4 * 5, "max in-degree {max_in}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_evolution(&spec(vec![StepSpec::new(0.0, 100.0, 0.0, 100.0)])).is_err());
        assert!(generate_evolution(&spec(vec![StepSpec::new(0.0, 120.0, 0.0, 0.0)])).is_err());
        let mut s = spec(vec![]);
        s.base_nodes = 0;
        assert!(generate_evolution(&s).is_err());
    }
}
