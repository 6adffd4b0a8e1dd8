//! Top-k extraction and agreement statistics between score vectors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("score vectors cover different node sets ({0})")]
    UniverseMismatch(String),
    #[error("node {0} appears more than once")]
    Duplicate(u64),
}

/// Entries ordered by descending score, ties broken by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankList {
    pub entries: Vec<(u64, f64)>,
}

fn rank_cmp(a: &(u64, f64), b: &(u64, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// First `k` entries of the deterministic ordering; `k > N` returns all.
pub fn top_k(scores: &[(u64, f64)], k: usize) -> RankList {
    let mut entries = scores.to_vec();
    let k = k.min(entries.len());
    if k < entries.len() {
        entries.select_nth_unstable_by(k, rank_cmp);
        entries.truncate(k);
    }
    entries.sort_by(rank_cmp);
    RankList { entries }
}

impl RankList {
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Writes `rank,external_id,score` rows, ranks starting at 1.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "external_id", "score"])?;
        for (i, (id, s)) in self.entries.iter().enumerate() {
            out.write_record([(i + 1).to_string(), id.to_string(), format!("{s:.16e}")])?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub k: usize,
    /// |top_k(a) ∩ top_k(b)| / k; 1 when k is 0.
    pub overlap: f64,
    /// Kendall tau-b over the union of both top-k sets; `None` when fewer
    /// than two items or either side is constant.
    pub kendall_tau: Option<f64>,
    pub union_size: usize,
}

fn as_map(scores: &[(u64, f64)]) -> Result<BTreeMap<u64, f64>, CompareError> {
    let mut m = BTreeMap::new();
    for &(id, s) in scores {
        if m.insert(id, s).is_some() {
            return Err(CompareError::Duplicate(id));
        }
    }
    Ok(m)
}

/// Top-k overlap and Kendall tau between two score vectors over the same
/// node set.
pub fn rank_agreement(
    a: &[(u64, f64)],
    b: &[(u64, f64)],
    k: usize,
) -> Result<Agreement, CompareError> {
    let (ma, mb) = (as_map(a)?, as_map(b)?);
    if ma.len() != mb.len() || ma.keys().zip(mb.keys()).any(|(x, y)| x != y) {
        let only_a = ma.keys().find(|id| !mb.contains_key(id));
        let only_b = mb.keys().find(|id| !ma.contains_key(id));
        return Err(CompareError::UniverseMismatch(format!(
            "first unmatched ids: {only_a:?} / {only_b:?}"
        )));
    }
    let k = k.min(ma.len());
    let top_a: BTreeSet<u64> = top_k(a, k).ids().collect();
    let top_b: BTreeSet<u64> = top_k(b, k).ids().collect();
    let overlap = if k == 0 {
        1.0
    } else {
        top_a.intersection(&top_b).count() as f64 / k as f64
    };
    let union: Vec<u64> = top_a.union(&top_b).copied().collect();
    let xs: Vec<f64> = union.iter().map(|id| ma[id]).collect();
    let ys: Vec<f64> = union.iter().map(|id| mb[id]).collect();
    Ok(Agreement {
        k,
        overlap,
        kendall_tau: kendall_tau(&xs, &ys),
        union_size: union.len(),
    })
}

fn tied_pairs(sorted: impl Iterator<Item = f64>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<f64> = None;
    for v in sorted {
        if prev == Some(v) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    total + run * (run + 1) / 2
}

/// Merge sort counting strict inversions.
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "kendall_tau needs paired samples");
    let n = x.len() as u64;
    if n < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));

    let total = n * (n - 1) / 2;
    let ties_x = tied_pairs(idx.iter().map(|&i| x[i]));
    let mut joint = 0u64;
    let mut run = 0u64;
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] && y[w[0]] == y[w[1]] {
            run += 1;
        } else {
            joint += run * (run + 1) / 2;
            run = 0;
        }
    }
    joint += run * (run + 1) / 2;

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let discordant = count_inversions(&mut ys, &mut buf);
    let ties_y = tied_pairs(ys.iter().copied());

    let denom = ((total - ties_x) as f64 * (total - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    let numer =
        total as f64 - ties_x as f64 - ties_y as f64 + joint as f64 - 2.0 * discordant as f64;
    Some(numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
        let n = x.len();
        let (mut s, mut tx, mut ty, mut total) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                total += 1;
                let a = (x[i] - x[j]).signum() as i64 * i64::from(x[i] != x[j]);
                let b = (y[i] - y[j]).signum() as i64 * i64::from(y[i] != y[j]);
                s += a * b;
                tx += i64::from(a == 0);
                ty += i64::from(b == 0);
            }
        }
        let d = (((total - tx) * (total - ty)) as f64).sqrt();
        (d > 0.0).then(|| s as f64 / d)
    }

    #[test]
    fn top_k_examples() {
        let s = [(10, 3.0), (11, 1.0), (12, 2.0)];
        assert_eq!(top_k(&s, 2).entries, vec![(10, 3.0), (12, 2.0)]);
        assert!(top_k(&s, 0).entries.is_empty());
        assert_eq!(top_k(&s, 10).entries.len(), 3);
        let flat = [(5, 1.0), (2, 1.0), (9, 1.0)];
        assert_eq!(top_k(&flat, 3).ids().collect::<Vec<_>>(), vec![2, 5, 9]);
    }

    #[test]
    fn agreement_identity_and_reversal() {
        let a: Vec<(u64, f64)> = (0..20).map(|i| (i, i as f64)).collect();
        let same = rank_agreement(&a, &a, 5).unwrap();
        assert_eq!(same.overlap, 1.0);
        assert_eq!(same.kendall_tau, Some(1.0));
        let rev: Vec<(u64, f64)> = (0..20).map(|i| (i, -(i as f64))).collect();
        let full = rank_agreement(&a, &rev, 20).unwrap();
        assert_eq!(full.kendall_tau, Some(-1.0));
        assert_eq!(rank_agreement(&a, &rev, 5).unwrap().overlap, 0.0);
    }

    #[test]
    fn universe_mismatch() {
        let a = [(1, 1.0), (2, 2.0)];
        let b = [(1, 1.0), (3, 2.0)];
        assert!(matches!(
            rank_agreement(&a, &b, 1),
            Err(CompareError::UniverseMismatch(_))
        ));
        let dup = [(1, 1.0), (1, 2.0)];
        assert!(matches!(
            rank_agreement(&dup, &dup, 1),
            Err(CompareError::Duplicate(1))
        ));
    }

    #[test]
    fn rank_list_csv() {
        let mut buf = Vec::new();
        top_k(&[(4, 0.5), (7, 0.25)], 2)
            .write_csv(&mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rank,external_id,score\n1,4,5.0000000000000000e-1\n2,7,2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn tau_degenerate_inputs() {
        assert_eq!(kendall_tau(&[], &[]), None);
        assert_eq!(kendall_tau(&[1.0], &[2.0]), None);
        assert_eq!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    proptest! {
        #[test]
        fn tau_matches_pair_counting(
            pairs in prop::collection::vec((0u8..6, 0u8..6), 2..50)
        ) {
            // small value range forces ties on both sides
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match (kendall_tau(&x, &y), brute_tau_b(&x, &y)) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn tau_matches_on_continuous_scores(
            x in prop::collection::vec(-1e3f64..1e3, 2..50),
            seed in any::<u64>(),
        ) {
            let y: Vec<f64> = x.iter().enumerate()
                .map(|(i, v)| v * ((seed >> (i % 64)) & 1) as f64 - (i as f64) * 0.5)
                .collect();
            let (a, b) = (kendall_tau(&x, &y), brute_tau_b(&x, &y));
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn top_k_prefix_and_scale_invariance(
            scores in prop::collection::vec(0u32..20, 0..40),
            k in 0usize..45,
            scale in 0.001f64..1000.0,
        ) {
            let s: Vec<(u64, f64)> =
                scores.iter().enumerate().map(|(i, v)| (i as u64 * 3, *v as f64)).collect();
            let a = top_k(&s, k);
            let b = top_k(&s, k + 1);
            prop_assert_eq!(&a.entries[..], &b.entries[..a.entries.len()]);
            let scaled: Vec<(u64, f64)> = s.iter().map(|(i, v)| (*i, v * scale)).collect();
            prop_assert_eq!(a.ids().collect::<Vec<_>>(), top_k(&scaled, k).ids().collect::<Vec<_>>());
        }
    }
}
