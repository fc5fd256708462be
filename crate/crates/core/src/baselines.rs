//! Reference clusterers: Lloyd k-means on real features and majority-vote
//! k-means on fixed binary codes.

use crate::bitcode::{hamming_unchecked, nearest_hamming_unchecked, PackedBitMatrix};
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::optimizer::Assignments;
use crate::rng::substream;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// `d × c`, one centroid per column.
    pub centroids: DenseMatrix,
    pub assignments: Assignments,
    /// Within-cluster sum of squares after every centroid update.
    pub wcss_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BinaryKMeansResult {
    pub centroids: PackedBitMatrix,
    pub assignments: Assignments,
    /// Total Hamming cost after every centroid update.
    pub cost_trace: Vec<u64>,
}

fn check_counts(n: usize, c: usize) -> Result<()> {
    if c == 0 {
        return Err(Error::config("clusters", "must be at least 1"));
    }
    if c > n {
        return Err(Error::config(
            "clusters",
            format!("{c} clusters requested for {n} samples"),
        ));
    }
    Ok(())
}

/// Draws an index with probability proportional to `weights`; uniform over
/// `fallback` when every weight is zero.
fn weighted_pick(weights: &[f64], fallback: &[usize], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        let mut target = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                if target < w {
                    return i;
                }
                target -= w;
            }
        }
        // rounding: last positive weight
        return weights.iter().rposition(|&w| w > 0.0).unwrap();
    }
    fallback[rng.random_range(0..fallback.len())]
}

/// k-means++ seeding over `n` items with a squared distance `dist2(i, j)`.
pub(crate) fn kmeanspp_seeds(
    n: usize,
    c: usize,
    rng: &mut impl Rng,
    dist2: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<usize> {
    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).into_par_iter().map(|i| dist2(i, seeds[0])).collect();
    while seeds.len() < c {
        let unused: Vec<usize> = (0..n).filter(|i| !seeds.contains(i)).collect();
        let mut w = nearest.clone();
        for &s in &seeds {
            w[s] = 0.0;
        }
        let next = weighted_pick(&w, &unused, rng);
        seeds.push(next);
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = d.min(dist2(i, next)));
    }
    seeds
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from k-means++ seeds on the columns of `x` (`d × N`).
/// Stops when assignments no longer change or after `iters` updates.
pub fn kmeans(x: &DenseMatrix, c: usize, iters: usize, seed: u64) -> Result<KMeansResult> {
    let (d, n) = x.shape();
    check_counts(n, c)?;
    let samples = x.transpose();
    let mut rng = substream(seed, "kmeans", 0);
    let seeds = kmeanspp_seeds(n, c, &mut rng, |i, j| sq_dist(samples.row(i), samples.row(j)));
    let mut centroids = DenseMatrix::from_fn(c, d, |j, r| samples.get(seeds[j], r));

    let assign = |cents: &DenseMatrix| -> Vec<(usize, f64)> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let row = samples.row(i);
                let mut best = (0, f64::INFINITY);
                for j in 0..c {
                    let dd = sq_dist(row, cents.row(j));
                    if dd < best.1 {
                        best = (j, dd);
                    }
                }
                best
            })
            .collect()
    };

    let mut nearest = assign(&centroids);
    let mut labels: Vec<usize> = nearest.iter().map(|p| p.0).collect();
    let mut trace = Vec::new();
    for _ in 0..iters {
        // centroid update with farthest-point repair for empty clusters
        let mut sums = DenseMatrix::zeros(c, d);
        let mut counts = vec![0usize; c];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            sums.row_mut(l)
                .iter_mut()
                .zip(samples.row(i))
                .for_each(|(s, v)| *s += v);
        }
        for (j, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                let src: Vec<f64> = sums.row(j).iter().map(|s| s * inv).collect();
                centroids.row_mut(j).copy_from_slice(&src);
            }
        }
        for j in 0..c {
            if counts[j] == 0 {
                if let Some(far) = farthest_movable(&nearest, &labels, &counts) {
                    counts[labels[far]] -= 1;
                    counts[j] = 1;
                    labels[far] = j;
                    nearest[far] = (j, 0.0);
                    centroids.row_mut(j).copy_from_slice(samples.row(far));
                }
            }
        }
        let wcss: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| sq_dist(samples.row(i), centroids.row(l)))
            .sum();
        trace.push(wcss);
        nearest = assign(&centroids);
        let new_labels: Vec<usize> = nearest.iter().map(|p| p.0).collect();
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }
    Ok(KMeansResult {
        centroids: centroids.transpose(),
        assignments: Assignments::new(labels, c)?,
        wcss_trace: trace,
    })
}

/// Sample with the largest distance to its centroid among clusters holding
/// more than one sample. `None` when all such distances are zero.
fn farthest_movable<T: PartialOrd + Copy + Default>(
    nearest: &[(usize, T)],
    labels: &[usize],
    counts: &[usize],
) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &(_, d)) in nearest.iter().enumerate() {
        if counts[labels[i]] > 1 && d > T::default() && best.is_none_or(|b| d > b.1) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}

/// Majority vote per bit over the members of each cluster (ties → +1).
/// Clusters without members keep their previous column.
pub(crate) fn majority_centroids(b: &PackedBitMatrix, labels: &[usize], previous: &PackedBitMatrix) -> PackedBitMatrix {
    let k = b.rows();
    let c = previous.cols();
    let mut sums = vec![0i64; k * c];
    let mut counts = vec![0usize; c];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let col = b.column(i);
        let acc = &mut sums[l * k..(l + 1) * k];
        for (r, s) in acc.iter_mut().enumerate() {
            *s += i64::from(col.sign(r));
        }
    }
    let mut q = previous.clone();
    for j in 0..c {
        if counts[j] == 0 {
            continue;
        }
        for r in 0..k {
            q.set(r, j, if sums[j * k + r] >= 0 { 1 } else { -1 });
        }
    }
    q
}

/// Hamming k-means on fixed codes: nearest-centroid assignment alternating
/// with per-bit majority vote.
pub fn binary_kmeans(b: &PackedBitMatrix, c: usize, iters: usize, seed: u64) -> Result<BinaryKMeansResult> {
    let n = b.cols();
    check_counts(n, c)?;
    let mut rng = substream(seed, "binary_kmeans", 0);
    let seeds = kmeanspp_seeds(n, c, &mut rng, |i, j| {
        let h = f64::from(hamming_unchecked(b.column(i).words(), b.column(j).words()));
        h * h
    });
    let mut q = PackedBitMatrix::new(b.rows(), c);
    for (j, &s) in seeds.iter().enumerate() {
        q.set_column(j, b.column(s));
    }
    let assign = |q: &PackedBitMatrix| -> Vec<(usize, u32)> {
        (0..n)
            .into_par_iter()
            .map(|i| nearest_hamming_unchecked(b.column(i).words(), q))
            .collect()
    };
    let mut nearest = assign(&q);
    let mut labels: Vec<usize> = nearest.iter().map(|p| p.0).collect();
    let mut trace = Vec::new();
    for _ in 0..iters {
        q = majority_centroids(b, &labels, &q);
        let mut counts = vec![0usize; c];
        labels.iter().for_each(|&l| counts[l] += 1);
        for j in 0..c {
            if counts[j] == 0 {
                if let Some(far) = farthest_movable(&nearest, &labels, &counts) {
                    counts[labels[far]] -= 1;
                    counts[j] = 1;
                    labels[far] = j;
                    nearest[far] = (j, 0);
                    q.set_column(j, b.column(far));
                }
            }
        }
        let cost: u64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| u64::from(hamming_unchecked(b.column(i).words(), q.column(l).words())))
            .sum();
        trace.push(cost);
        nearest = assign(&q);
        let new_labels: Vec<usize> = nearest.iter().map(|p| p.0).collect();
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }
    Ok(BinaryKMeansResult {
        centroids: q,
        assignments: Assignments::new(labels, c)?,
        cost_trace: trace,
    })
}
