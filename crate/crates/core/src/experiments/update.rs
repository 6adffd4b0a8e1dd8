use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::graph::LinkGraph;
use crate::ranking::{
    pagerank_with_reference, reinforcement_rank_with_reference, uniform_distribution,
    ConvergenceTrace, Init, IterationConfig, NodeValues, PolicyRule, RankError,
};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PageRank,
    Reinforcement,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PageRank => "pagerank",
            Method::Reinforcement => "rr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitKind {
    /// `R₀ = r`, or `x₀ = v` for PageRank.
    Default,
    /// Previous snapshot's converged scores, matched by external id.
    Warm,
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitKind::Default => "default",
            InitKind::Warm => "warm",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// γ or c.
    pub discount: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Tolerance of the reference solutions errors are measured against.
    pub reference_tolerance: f64,
    pub reference_max_iterations: usize,
    pub deterministic: bool,
    pub policy: PolicyRule,
    pub rewards: NodeValues,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            discount: 0.85,
            tolerance: 1e-10,
            max_iterations: 10_000,
            reference_tolerance: 1e-12,
            reference_max_iterations: 100_000,
            deterministic: false,
            policy: PolicyRule::Uniform,
            rewards: NodeValues::constant(1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UpdateExperimentResult {
    pub method: Method,
    pub init_kind: InitKind,
    /// (initializer, target) snapshot indices.
    pub pair: (usize, usize),
    /// Iterations used; equals `max_iterations` when not converged.
    pub iterations_to_tol: usize,
    pub converged: bool,
    pub trace: ConvergenceTrace,
    pub initial_rel_error: f64,
}

/// The (initializer, target) pairs compared by default: every snapshot
/// against the last one, plus the step between the two snapshots before the
/// last. For four snapshots this is `(2,3), (1,2), (1,3), (0,3)`, nearest
/// pair first.
pub fn default_pairs(n: usize) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let last = n - 1;
    let mut pairs = vec![(last - 1, last)];
    if n >= 3 {
        pairs.push((last - 2, last - 1));
    }
    pairs.extend((0..last - 1).rev().map(|i| (i, last)));
    pairs
}

fn solve(
    method: Method,
    g: &LinkGraph,
    cfg: &ExperimentConfig,
    iter: IterationConfig,
    reference: Option<&[f64]>,
) -> Result<(Vec<f64>, ConvergenceTrace), RankError> {
    match method {
        Method::Reinforcement => {
            let p = cfg.policy.build(g)?;
            let r = cfg.rewards.rewards(g)?;
            reinforcement_rank_with_reference(g, &p, &r, &iter, reference)
                .map(|(s, t)| (s.values, t))
        }
        Method::PageRank => {
            let v = uniform_distribution(g.node_count());
            pagerank_with_reference(g, &iter, &v, None, reference).map(|(s, t)| (s.values, t))
        }
    }
}

/// Maps converged scores of `from` onto `to` by external id. New nodes get
/// their reward (reinforcement) or `1/N` (PageRank, renormalized by the
/// solver).
fn warm_vector(
    method: Method,
    from: &LinkGraph,
    from_scores: &[f64],
    to: &LinkGraph,
    cfg: &ExperimentConfig,
) -> Vec<f64> {
    let fallback = match method {
        Method::Reinforcement => cfg.rewards.resolve(to),
        Method::PageRank => uniform_distribution(to.node_count()),
    };
    to.external_ids()
        .iter()
        .zip(fallback)
        .map(|(&id, default)| from.internal_index(id).map_or(default, |i| from_scores[i]))
        .collect()
}

/// Runs default and warm-started solves for every (initializer, target)
/// pair, measuring relative error against a tight reference solution of the
/// target. Results come back ordered by pair, default init first.
pub fn run_update_experiment(
    snapshots: &[LinkGraph],
    pairs: &[(usize, usize)],
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<Vec<UpdateExperimentResult>, ExperimentError> {
    if snapshots.len() < 2 {
        return Err(ExperimentError::Input("need at least two snapshots".into()));
    }
    if let Some(&(a, b)) = pairs
        .iter()
        .find(|(a, b)| *a >= snapshots.len() || *b >= snapshots.len())
    {
        return Err(ExperimentError::Input(format!(
            "pair ({a},{b}) references a missing snapshot"
        )));
    }

    let reference_cfg = IterationConfig::new(cfg.discount)
        .tolerance(cfg.reference_tolerance)
        .max_iterations(cfg.reference_max_iterations)
        .deterministic(cfg.deterministic);
    let mut needed: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    needed.sort_unstable();
    needed.dedup();
    let solved: Vec<(usize, Vec<f64>)> = needed
        .par_iter()
        .map(|&i| {
            solve(method, &snapshots[i], cfg, reference_cfg.clone(), None).map(|(x, _)| (i, x))
        })
        .collect::<Result<_, _>>()?;
    let reference = |i: usize| -> &[f64] {
        &solved
            .iter()
            .find(|(j, _)| *j == i)
            .expect("solved above")
            .1
    };

    let jobs: Vec<((usize, usize), InitKind)> = pairs
        .iter()
        .flat_map(|&p| [(p, InitKind::Default), (p, InitKind::Warm)])
        .collect();
    let results = jobs
        .par_iter()
        .map(|&((from, to), init_kind)| {
            let target = &snapshots[to];
            let init = match init_kind {
                InitKind::Default => Init::Default,
                InitKind::Warm => Init::FromScores(warm_vector(
                    method,
                    &snapshots[from],
                    reference(from),
                    target,
                    cfg,
                )),
            };
            let iter = IterationConfig::new(cfg.discount)
                .tolerance(cfg.tolerance)
                .max_iterations(cfg.max_iterations)
                .deterministic(cfg.deterministic)
                .init(init);
            let (_, trace) = solve(method, target, cfg, iter, Some(reference(to)))?;
            Ok(UpdateExperimentResult {
                method,
                init_kind,
                pair: (from, to),
                iterations_to_tol: trace.iterations_used,
                converged: trace.converged,
                initial_rel_error: trace.initial_rel_error.unwrap_or(f64::NAN),
                trace,
            })
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    Ok(results)
}

/// Writes `method,init_kind,pair,iterations_to_tol,initial_rel_error` rows.
pub fn write_summary<W: Write>(results: &[UpdateExperimentResult], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "method",
        "init_kind",
        "pair",
        "iterations_to_tol",
        "initial_rel_error",
    ])?;
    for r in results {
        out.write_record([
            r.method.to_string(),
            r.init_kind.to_string(),
            format!("{}-{}", r.pair.0, r.pair.1),
            r.iterations_to_tol.to_string(),
            format!("{:.16e}", r.initial_rel_error),
        ])?;
    }
    out.flush()
}
