use crate::graph::LinkGraph;

use super::kernel::{iterate, propagate_reverse};
use super::{
    check_len, ConvergenceTrace, Init, IterationConfig, Policy, RankError, RewardVector, ScoreKind,
    ScoreVector,
};

fn check_inputs(g: &LinkGraph, p: &Policy, r: &RewardVector) -> Result<(), RankError> {
    p.check_against(g)?;
    check_len("rewards", g.node_count(), r.len())
}

/// Reverse Bellman iteration `R_{k+1} = γ·Pᵀ·R_k + r`.
///
/// Starts from `R₀ = r` unless the config carries a warm start. Nodes without
/// predecessors settle at `r(s)` after one step; dangling rows contribute
/// nothing and need no patching.
pub fn reinforcement_rank(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    cfg: &IterationConfig,
) -> Result<(ScoreVector, ConvergenceTrace), RankError> {
    reinforcement_rank_with_reference(g, p, r, cfg, None)
}

/// As [`reinforcement_rank`], also recording the relative L1 error of every
/// iterate against `reference`.
pub fn reinforcement_rank_with_reference(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    cfg: &IterationConfig,
    reference: Option<&[f64]>,
) -> Result<(ScoreVector, ConvergenceTrace), RankError> {
    cfg.validate()?;
    check_inputs(g, p, r)?;
    if let Some(reference) = reference {
        check_len("reference scores", g.node_count(), reference.len())?;
    }
    let init = match &cfg.init {
        Init::Default => r.values().to_vec(),
        Init::FromScores(x) => {
            check_len("initial scores", g.node_count(), x.len())?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(RankError::Config("initial scores must be finite".into()));
            }
            x.clone()
        }
    };
    let gamma = cfg.discount;
    let parallel = !cfg.deterministic;
    let rewards = r.values();
    let (values, trace) = iterate(init, cfg, reference, |prev, next| {
        propagate_reverse(
            g,
            p.reverse_weights(),
            prev,
            gamma,
            Some(rewards),
            next,
            parallel,
        );
        None
    })?;
    Ok((
        ScoreVector {
            values,
            kind: ScoreKind::Authority,
        },
        trace,
    ))
}

/// One application of the reverse Bellman operator `T(x) = γ·Pᵀ·x + r`.
pub fn reverse_bellman_step(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    gamma: f64,
    x: &[f64],
) -> Result<Vec<f64>, RankError> {
    check_inputs(g, p, r)?;
    check_len("scores", g.node_count(), x.len())?;
    let mut out = vec![0.0; x.len()];
    propagate_reverse(
        g,
        p.reverse_weights(),
        x,
        gamma,
        Some(r.values()),
        &mut out,
        false,
    );
    Ok(out)
}

/// Partial sum `Σ_{j=0}^{depth} γ^j r^(j)` of the k-step historical rewards,
/// where `r^(j) = Pᵀ r^(j−1)` and `r^(0) = r`.
pub fn truncated_rank(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    gamma: f64,
    depth: usize,
) -> Result<ScoreVector, RankError> {
    check_inputs(g, p, r)?;
    if !gamma.is_finite() {
        return Err(RankError::Config("discount must be finite".into()));
    }
    let mut term = r.values().to_vec();
    let mut total = term.clone();
    let mut next = vec![0.0; term.len()];
    let mut factor = 1.0;
    for _ in 0..depth {
        propagate_reverse(g, p.reverse_weights(), &term, 1.0, None, &mut next, false);
        std::mem::swap(&mut term, &mut next);
        factor *= gamma;
        for (acc, t) in total.iter_mut().zip(&term) {
            *acc += factor * t;
        }
    }
    Ok(ScoreVector {
        values: total,
        kind: ScoreKind::Truncated { depth },
    })
}

/// Fixed-point defect `‖R − (γ·Pᵀ·R + r)‖∞`.
pub fn residual(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    gamma: f64,
    scores: &[f64],
) -> Result<f64, RankError> {
    let t = reverse_bellman_step(g, p, r, gamma, scores)?;
    Ok(t.iter()
        .zip(scores)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
