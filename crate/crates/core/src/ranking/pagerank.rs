use crate::graph::LinkGraph;

use super::kernel::{iterate, l1_norm, propagate_reverse};
use super::{
    check_len, compensated_sum, ConvergenceTrace, Init, IterationConfig, Policy, RankError,
    ScoreKind, ScoreVector,
};

const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

pub fn uniform_distribution(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_distribution(what: &'static str, n: usize, v: &[f64]) -> Result<(), RankError> {
    check_len(what, n, v.len())?;
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(RankError::Config(format!(
            "{what} has negative or non-finite entries"
        )));
    }
    let sum = compensated_sum(v.iter().copied());
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(RankError::Config(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// PageRank by structured power iteration.
///
/// `teleport` is v; `dangling` is u and defaults to v. With u = v each step
/// is `y = c·Hᵀx; ω = ‖x‖₁ − ‖y‖₁; y += ω·v`, the single ω collecting both
/// dangling and teleport mass. With a distinct u the dangling mass `c·aᵀx`
/// goes to u and the teleport mass `(1 − c)·‖x‖₁` to v, so every iterate
/// equals `Gᵀx` exactly. The result is normalized to sum to one.
pub fn pagerank(
    g: &LinkGraph,
    cfg: &IterationConfig,
    teleport: &[f64],
    dangling: Option<&[f64]>,
) -> Result<(ScoreVector, ConvergenceTrace), RankError> {
    pagerank_with_reference(g, cfg, teleport, dangling, None)
}

pub fn pagerank_with_reference(
    g: &LinkGraph,
    cfg: &IterationConfig,
    teleport: &[f64],
    dangling: Option<&[f64]>,
    reference: Option<&[f64]>,
) -> Result<(ScoreVector, ConvergenceTrace), RankError> {
    cfg.validate()?;
    let n = g.node_count();
    check_distribution("teleportation vector", n, teleport)?;
    if let Some(u) = dangling {
        check_distribution("dangling distribution", n, u)?;
    }
    if let Some(reference) = reference {
        check_len("reference scores", n, reference.len())?;
    }
    let init = match &cfg.init {
        Init::Default => teleport.to_vec(),
        Init::FromScores(x) => {
            check_len("initial scores", n, x.len())?;
            if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(RankError::Config(
                    "initial PageRank scores must be finite and nonnegative".into(),
                ));
            }
            let total = compensated_sum(x.iter().copied());
            if total.is_nan() || total <= 0.0 {
                return Err(RankError::Config(
                    "initial PageRank scores sum to zero".into(),
                ));
            }
            x.iter().map(|v| v / total).collect()
        }
    };

    let h = Policy::uniform(g);
    let c = cfg.discount;
    let parallel = !cfg.deterministic;
    let dangling_nodes: Vec<usize> = (0..n).filter(|&i| g.is_dangling(i)).collect();

    let (mut values, trace) = iterate(init, cfg, reference, |x, y| {
        propagate_reverse(g, h.reverse_weights(), x, c, None, y, parallel);
        let x_norm = l1_norm(x, parallel);
        let omega = x_norm - l1_norm(y, parallel);
        match dangling {
            None => {
                for (yi, vi) in y.iter_mut().zip(teleport) {
                    *yi += omega * vi;
                }
            }
            Some(u) => {
                let dangling_mass = c * dangling_nodes.iter().map(|&i| x[i]).sum::<f64>();
                let teleport_mass = (1.0 - c) * x_norm;
                for ((yi, ui), vi) in y.iter_mut().zip(u).zip(teleport) {
                    *yi += dangling_mass * ui + teleport_mass * vi;
                }
            }
        }
        Some(omega)
    })?;

    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter_mut().for_each(|v| *v /= total);
    }
    Ok((
        ScoreVector {
            values,
            kind: ScoreKind::PageRank,
        },
        trace,
    ))
}
