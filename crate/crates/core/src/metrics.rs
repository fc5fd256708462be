//! External clustering quality measures: ACC, NMI, purity and pairwise F.
//!
//! Labels may be arbitrary integers; both labelings are compacted to dense
//! indices before the contingency table is built, so every measure is
//! invariant to relabeling.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("label length mismatch: predicted={predicted}, truth={truth}")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("cannot score an empty labeling")]
    Empty,
}

/// Cluster-by-class co-occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self, MetricsError> {
        if pred.len() != truth.len() {
            return Err(MetricsError::LengthMismatch {
                predicted: pred.len(),
                truth: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(MetricsError::Empty);
        }
        let (p, np) = compact(pred);
        let (t, nt) = compact(truth);
        let mut counts = vec![vec![0u64; nt]; np];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a][b] += 1;
        }
        Ok(Self {
            counts,
            total: pred.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn num_classes(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    fn cluster_sizes(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn class_sizes(&self) -> Vec<u64> {
        (0..self.num_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Largest number of samples placed on the diagonal by a one-to-one
    /// cluster↔class matching.
    pub fn best_matching(&self) -> u64 {
        let n = self.num_clusters().max(self.num_classes());
        let max = self.counts.iter().flatten().copied().max().unwrap_or(0) as i64;
        let cost: Vec<Vec<i64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = self.counts.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0);
                        max - c as i64
                    })
                    .collect()
            })
            .collect();
        let assignment = min_cost_assignment(&cost);
        assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| self.counts.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0))
            .sum()
    }
}

/// Hungarian algorithm (potentials form) for a square cost matrix. Returns
/// the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Fraction of samples matched under the best one-to-one relabeling.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    Ok(t.best_matching() as f64 / t.total as f64)
}

fn entropy(sizes: &[u64], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the two
/// entropies (natural log).
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let n = t.total as f64;
    let a = t.cluster_sizes();
    let b = t.class_sizes();
    let (ha, hb) = (entropy(&a, n), entropy(&b, n));
    if ha == 0.0 || hb == 0.0 {
        // Entropy vanishes only for a single group; two single groups are
        // the same partition.
        return Ok(if ha == 0.0 && hb == 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Share of samples belonging to the majority class of their cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let hit: u64 = t.counts.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(hit as f64 / t.total as f64)
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pairwise F1: precision and recall of "same cluster" decisions over all
/// sample pairs.
pub fn f_score(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let tp: u64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let pred_pairs: u64 = t.cluster_sizes().into_iter().map(pairs).sum();
    let true_pairs: u64 = t.class_sizes().into_iter().map(pairs).sum();
    if pred_pairs == 0 || true_pairs == 0 {
        return Ok(0.0);
    }
    let p = tp as f64 / pred_pairs as f64;
    let r = tp as f64 / true_pairs as f64;
    if p + r == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * p * r / (p + r))
}

/// All four measures for one labeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    pub f_score: f64,
}

pub fn score(pred: &[usize], truth: &[usize]) -> Result<ClusteringScores, MetricsError> {
    Ok(ClusteringScores {
        acc: accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
        f_score: f_score(pred, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRED: [usize; 6] = [0, 0, 1, 1, 2, 2];
    const TRUTH: [usize; 6] = [0, 1, 1, 1, 2, 2];

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identical_labelings_score_one() {
        let s = score(&TRUTH, &TRUTH).unwrap();
        assert_eq!(
            s,
            ClusteringScores {
                acc: 1.0,
                nmi: 1.0,
                purity: 1.0,
                f_score: 1.0
            }
        );
        let relabeled: Vec<usize> = TRUTH.iter().map(|l| [7, 3, 5][*l]).collect();
        assert_eq!(accuracy(&relabeled, &TRUTH).unwrap(), 1.0);
    }

    #[test]
    fn six_sample_accuracy_by_enumeration() {
        let mut best = 0;
        for perm in permutations(3) {
            let hits = PRED.iter().zip(&TRUTH).filter(|(p, t)| perm[**p] == **t).count();
            best = best.max(hits);
        }
        assert_eq!(best, 5);
        assert_eq!(accuracy(&PRED, &TRUTH).unwrap(), 5.0 / 6.0);
        assert_eq!(purity(&PRED, &TRUTH).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn six_sample_nmi_by_hand() {
        // clusters {0,1},{2,3},{4,5}; classes {0},{1,2,3},{4,5}
        let ln = f64::ln;
        let h_pred = -3.0 * (1.0 / 3.0) * ln(1.0 / 3.0);
        let h_true = -(1.0 / 6.0) * ln(1.0 / 6.0) - 0.5 * ln(0.5) - (1.0 / 3.0) * ln(1.0 / 3.0);
        // cells (c0,k0)=1, (c0,k1)=1, (c1,k1)=2, (c2,k2)=2
        let cell = |c: f64, a: f64, b: f64| c / 6.0 * ln(6.0 * c / (a * b));
        let mi = cell(1.0, 2.0, 1.0) + cell(1.0, 2.0, 3.0) + cell(2.0, 2.0, 3.0) + cell(2.0, 2.0, 2.0);
        let want = mi / (h_pred * h_true).sqrt();
        assert!((nmi(&PRED, &TRUTH).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn independent_partitions_have_zero_nmi() {
        // product partition: pred = i % 2, truth = i / 2 over 4 samples
        let pred = [0, 1, 0, 1, 0, 1, 0, 1];
        let truth = [0, 0, 1, 1, 2, 2, 3, 3];
        assert!(nmi(&pred, &truth).unwrap().abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn purity_of_singletons_is_one() {
        let pred: Vec<usize> = (0..6).collect();
        assert_eq!(purity(&pred, &TRUTH).unwrap(), 1.0);
    }

    #[test]
    fn f_score_single_cluster_against_two_classes() {
        assert_eq!(f_score(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(f_score(&[0, 1, 2], &[0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert_eq!(
            accuracy(&[0, 1], &[0]),
            Err(MetricsError::LengthMismatch { predicted: 2, truth: 1 })
        );
        assert_eq!(nmi(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn rectangular_matching() {
        // 3 clusters, 2 classes
        assert_eq!(accuracy(&[0, 1, 2, 2], &[0, 0, 1, 1]).unwrap(), 0.75);
        // 1 cluster, 3 classes
        assert_eq!(accuracy(&[0, 0, 0], &[0, 1, 2]).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn hungarian_small_square() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = min_cost_assignment(&cost);
        let total: i64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5);
    }
}
