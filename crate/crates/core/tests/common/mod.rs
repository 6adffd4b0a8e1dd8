#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rrank::graph::LinkGraph;

/// Random directed graph: `dangling_frac` of the nodes get no out-links, the
/// rest share `round(avg_out·n)` links (at least one each) with uniform
/// targets. Self-loops allowed, duplicates collapse.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, avg_out: f64, dangling_frac: f64) -> LinkGraph {
    let mut order: Vec<u64> = (0..n as u64).collect();
    order.shuffle(rng);
    let dangling = ((dangling_frac * n as f64).floor() as usize).min(n - 1);
    let sources = &order[dangling..];
    let links = ((avg_out * n as f64).round() as usize).max(sources.len());
    let mut edges: Vec<(u64, u64)> = sources
        .iter()
        .map(|&s| (s, rng.gen_range(0..n as u64)))
        .collect();
    for _ in sources.len()..links {
        let s = sources[rng.gen_range(0..sources.len())];
        edges.push((s, rng.gen_range(0..n as u64)));
    }
    LinkGraph::from_edges(0..n as u64, edges)
}

/// Draws from the acceptance family: N ∈ [10, 200], mean out-degree in
/// [1, 8], up to half the nodes dangling.
pub fn family_graph<R: Rng>(rng: &mut R) -> LinkGraph {
    let n = rng.gen_range(10..=200);
    let d = rng.gen_range(1.0..=8.0);
    let f = rng.gen_range(0.0..=0.5);
    random_graph(rng, n, d, f)
}

/// Same family with every node given out-links, so the uniform policy is
/// row-stochastic and its spectral radius is one.
pub fn closed_graph<R: Rng>(rng: &mut R) -> LinkGraph {
    let n = rng.gen_range(10..=200);
    let d = rng.gen_range(1.0..=8.0);
    random_graph(rng, n, d, 0.0)
}

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn l2_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn linf_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} [{name}]: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Copy of `g` with every external id shifted by `offset`.
pub fn shifted(g: &LinkGraph, offset: u64) -> LinkGraph {
    LinkGraph::from_edges(
        g.external_ids().iter().map(|id| id + offset),
        g.external_edges().map(|(s, d)| (s + offset, d + offset)),
    )
}

/// `Σ_{j=0}^{k} γ^j (Pᵀ)^j r` by dense matrix-vector products under the
/// uniform policy, written independently of the crate's kernels.
pub fn dense_truncated(g: &LinkGraph, r: &[f64], gamma: f64, k: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut pt = vec![vec![0.0; n]; n];
    for i in 0..n {
        let succ = g.successors(i);
        for &j in succ {
            pt[j][i] += 1.0 / succ.len() as f64;
        }
    }
    let mut term = r.to_vec();
    let mut total = r.to_vec();
    let mut factor = 1.0;
    for _ in 0..k {
        term = pt
            .iter()
            .map(|row| row.iter().zip(&term).map(|(a, b)| a * b).sum())
            .collect();
        factor *= gamma;
        for (t, v) in total.iter_mut().zip(&term) {
            *t += factor * v;
        }
    }
    total
}
