//! Direct dense solves used as ground truth for the iterative methods.

use nalgebra::{DMatrix, DVector};

use crate::graph::LinkGraph;

use super::{check_len, Policy, RankError, RewardVector, ScoreKind, ScoreVector};

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Dense LU oracle, refusing graphs above `cap` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseOracle {
    pub cap: usize,
}

impl Default for DenseOracle {
    fn default() -> Self {
        Self {
            cap: DEFAULT_DENSE_CAP,
        }
    }
}

fn solve_refined(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>, RankError> {
    let lu = a.clone().lu();
    let mut x = lu.solve(&b).ok_or(RankError::Singular)?;
    // one step of iterative refinement
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

impl DenseOracle {
    pub fn new(cap: usize) -> Self {
        Self { cap }
    }

    fn check_cap(&self, n: usize) -> Result<(), RankError> {
        if n > self.cap {
            Err(RankError::OverDenseCap { n, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// Solves `(I − γ·Pᵀ)·R = r`.
    pub fn solve_rr(
        &self,
        g: &LinkGraph,
        p: &Policy,
        r: &RewardVector,
        gamma: f64,
    ) -> Result<ScoreVector, RankError> {
        let n = g.node_count();
        self.check_cap(n)?;
        p.check_against(g)?;
        check_len("rewards", n, r.len())?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(RankError::Config(format!(
                "discount must lie in [0, 1), got {gamma}"
            )));
        }
        let mut a = DMatrix::<f64>::identity(n, n);
        let offs = g.forward_offsets();
        for s in 0..n {
            for (k, &d) in g.successors(s).iter().enumerate() {
                // row d of Pᵀ, column s
                a[(d, s)] -= gamma * p.forward_weights()[offs[s] + k];
            }
        }
        let b = DVector::from_column_slice(r.values());
        let x = solve_refined(a, b)?;
        Ok(ScoreVector {
            values: x.iter().copied().collect(),
            kind: ScoreKind::Authority,
        })
    }

    /// Materializes `G = c·S + (1 − c)·e·vᵀ` with `S = H + a·uᵀ` and solves
    /// `Gᵀπ = π`, `Σπ = 1`. `dangling` defaults to `teleport`.
    pub fn solve_pagerank(
        &self,
        g: &LinkGraph,
        c: f64,
        teleport: &[f64],
        dangling: Option<&[f64]>,
    ) -> Result<ScoreVector, RankError> {
        let n = g.node_count();
        self.check_cap(n)?;
        check_len("teleportation vector", n, teleport.len())?;
        let u = dangling.unwrap_or(teleport);
        check_len("dangling distribution", n, u.len())?;
        if !(c > 0.0 && c < 1.0) {
            return Err(RankError::Config(format!(
                "damping must lie in (0, 1), got {c}"
            )));
        }
        if n == 0 {
            return Ok(ScoreVector {
                values: Vec::new(),
                kind: ScoreKind::PageRank,
            });
        }
        let mut big_g = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let succ = g.successors(i);
            for j in 0..n {
                let s_ij = if succ.is_empty() {
                    u[j]
                } else if succ.binary_search(&j).is_ok() {
                    1.0 / succ.len() as f64
                } else {
                    0.0
                };
                big_g[(i, j)] = c * s_ij + (1.0 - c) * teleport[j];
            }
        }
        // (I − Gᵀ)π = 0 with the last equation replaced by Σπ = 1
        let mut a = DMatrix::<f64>::identity(n, n) - big_g.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = solve_refined(a, b)?;
        let total: f64 = x.iter().sum();
        Ok(ScoreVector {
            values: x.iter().map(|v| v / total).collect(),
            kind: ScoreKind::PageRank,
        })
    }
}

/// Dense solve of the reverse Bellman equation with the default cap.
pub fn exact_solve_rr(
    g: &LinkGraph,
    p: &Policy,
    r: &RewardVector,
    gamma: f64,
) -> Result<ScoreVector, RankError> {
    DenseOracle::default().solve_rr(g, p, r, gamma)
}

/// Dense stationary distribution of the Google matrix with the default cap.
pub fn exact_solve_pagerank(
    g: &LinkGraph,
    c: f64,
    teleport: &[f64],
    dangling: Option<&[f64]>,
) -> Result<ScoreVector, RankError> {
    DenseOracle::default().solve_pagerank(g, c, teleport, dangling)
}
