//! Sparse kernels shared by the iterative solvers.

use rayon::prelude::*;

use crate::graph::LinkGraph;

use super::{relative_l1_error, ConvergenceTrace, IterationConfig, RankError, TraceRecord};

/// Below this many nodes the parallel path is not worth the fork/join.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// `out[s] = scale · Σ_{p ∈ preds(s)} w(p, s)·x[p] + offset[s]`.
///
/// Each node's predecessor sum runs in ascending predecessor order on one
/// thread, so the result is bit-identical whether or not nodes are processed
/// in parallel.
pub(crate) fn propagate_reverse(
    g: &LinkGraph,
    reverse_weights: &[f64],
    x: &[f64],
    scale: f64,
    offset: Option<&[f64]>,
    out: &mut [f64],
    parallel: bool,
) {
    let offs = g.reverse_offsets();
    let update = |(s, slot): (usize, &mut f64)| {
        let lo = offs[s];
        let preds = g.predecessors(s);
        let mut acc = 0.0;
        for (k, &p) in preds.iter().enumerate() {
            acc += reverse_weights[lo + k] * x[p];
        }
        *slot = scale * acc + offset.map_or(0.0, |o| o[s]);
    };
    if parallel && out.len() >= PARALLEL_THRESHOLD {
        out.par_iter_mut().enumerate().for_each(update);
    } else {
        out.iter_mut().enumerate().for_each(update);
    }
}

pub(crate) fn l1_norm(x: &[f64], parallel: bool) -> f64 {
    if parallel && x.len() >= PARALLEL_THRESHOLD {
        x.par_iter().map(|v| v.abs()).sum()
    } else {
        x.iter().map(|v| v.abs()).sum()
    }
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64], parallel: bool) -> f64 {
    if parallel && a.len() >= PARALLEL_THRESHOLD {
        a.par_iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }
}

/// Runs a Jacobi-style fixed-point loop with the relative L1 stopping rule.
///
/// `step(prev, next)` writes the next iterate and may return a per-step
/// diagnostic recorded as [`TraceRecord::omega`].
pub(crate) fn iterate(
    init: Vec<f64>,
    cfg: &IterationConfig,
    reference: Option<&[f64]>,
    mut step: impl FnMut(&[f64], &mut [f64]) -> Option<f64>,
) -> Result<(Vec<f64>, ConvergenceTrace), RankError> {
    let parallel = !cfg.deterministic;
    let mut x = init;
    let mut next = vec![0.0; x.len()];
    let mut trace = ConvergenceTrace {
        initial_rel_error: reference.map(|r| relative_l1_error(&x, r)),
        ..Default::default()
    };
    for k in 1..=cfg.max_iterations {
        let omega = step(&x, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(RankError::NonFinite { iteration: k });
        }
        let residual = l1_distance(&next, &x, parallel);
        let prev_norm = l1_norm(&x, parallel);
        std::mem::swap(&mut x, &mut next);
        trace.records.push(TraceRecord {
            iteration: k,
            l1_residual: residual,
            rel_error: reference.map(|r| relative_l1_error(&x, r)),
            omega,
        });
        trace.iterations_used = k;
        if residual <= cfg.tolerance * prev_norm {
            trace.converged = true;
            break;
        }
    }
    Ok((x, trace))
}
