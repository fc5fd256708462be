//! The individual minimization steps of the alternating solver.
//!
//! Every step updates one block of variables with the rest held fixed:
//! projections (shared, then per view), codes, centroids, assignments, the
//! ℓ21 reweighting and the view weights. They are exposed individually so
//! that each can be checked against an independent oracle.

use super::model::{Assignments, ViewEmbedding};
use super::params::Hyperparams;
use crate::bitcode::{hamming_unchecked, nearest_weighted_unchecked, BitRowWeights, PackedBitMatrix, WORD_BITS};
use crate::error::{Error, Result};
use crate::numeric::{matmul_nt, matmul_tn, Cholesky, DenseMatrix};
use rayon::prelude::*;

/// Guard for rows of `B − QF` that are reconstructed exactly.
pub const ROW_NORM_FLOOR: f64 = 1e-8;
/// Lower clamp on per-view losses before the closed-form weight update.
pub const VIEW_LOSS_FLOOR: f64 = 1e-12;

pub const ETA_INIT: f64 = 1.0;
pub const ETA_FLOOR: f64 = 1e-4;
pub const ETA_GROW: f64 = 2.0;
pub const ETA_RELAX: f64 = 0.9;
pub const ETA_MAX_RETRIES: usize = 10;

/// `(α^v)^r` for every view.
pub fn view_factors(alpha: &[f64], r: f64) -> Vec<f64> {
    alpha.iter().map(|a| a.powf(r)).collect()
}

/// Shared projection: solves
/// `Σ_v w_v ((1 − λ₂/N) ψ_vψ_vᵀ + λ₁ I) P_S = (Σ_v w_v ψ_v) B_Sᵀ`
/// with `w_v = (α^v)^r`, the stationarity condition of the shared-block
/// objective.
pub fn update_p_shared(
    views: &[ViewEmbedding],
    b_shared: &DenseMatrix,
    alpha: &[f64],
    hyper: &Hyperparams,
) -> Result<DenseMatrix> {
    let l = views[0].dim();
    let n = views[0].num_samples();
    if b_shared.cols() != n {
        return Err(Error::Data("shared code block has wrong sample count".into()));
    }
    let w = view_factors(alpha, hyper.r);
    let mut system = DenseMatrix::zeros(l, l);
    let mut mixed = DenseMatrix::zeros(l, n);
    for (view, &wv) in views.iter().zip(&w) {
        system.add_scaled(wv * (1.0 - hyper.lambda2_over_n), view.gram())?;
        mixed.add_scaled(wv, view.psi())?;
    }
    system.add_diagonal(hyper.lambda1 * w.iter().sum::<f64>());
    let rhs = matmul_nt(&mixed, b_shared)?;
    Ok(Cholesky::factor(&system, "p_shared")?.solve(&rhs)?)
}

/// Individual projection of one view: `W ψ B_Iᵀ` with `W` the inverse of
/// the (pre-factored) regularized Gram matrix.
pub fn update_p_individual(view: &ViewEmbedding, system: &Cholesky, b_individual: &DenseMatrix) -> Result<DenseMatrix> {
    let rhs = matmul_nt(view.psi(), b_individual)?;
    Ok(system.solve(&rhs)?)
}

/// `(P^v)ᵀ ψ_v` stacked as shared rows over individual rows (`K × N`).
pub fn project(view: &ViewEmbedding, p_shared: &DenseMatrix, p_individual: &DenseMatrix) -> Result<DenseMatrix> {
    let top = matmul_tn(p_shared, view.psi())?;
    let bottom = matmul_tn(p_individual, view.psi())?;
    Ok(DenseMatrix::vstack(&top, &bottom)?)
}

/// `Σ_v (α^v)^r (P^v)ᵀψ_v + λ₃ Q F`, the matrix whose sign is the optimal
/// code update.
pub fn code_target(
    projections: &[DenseMatrix],
    alpha: &[f64],
    hyper: &Hyperparams,
    centroids: &PackedBitMatrix,
    assignments: &Assignments,
) -> Result<DenseMatrix> {
    let (k, n) = projections[0].shape();
    let mut target = DenseMatrix::zeros(k, n);
    for (y, w) in projections.iter().zip(view_factors(alpha, hyper.r)) {
        target.add_scaled(w, y)?;
    }
    if hyper.lambda3 != 0.0 {
        for r in 0..k {
            let row = target.row_mut(r);
            for (i, v) in row.iter_mut().enumerate() {
                *v += hyper.lambda3 * f64::from(centroids.get(r, assignments.labels()[i]));
            }
        }
    }
    Ok(target)
}

/// Code update: elementwise sign of the target, `sgn(0) = +1`.
pub fn update_b(target: &DenseMatrix) -> PackedBitMatrix {
    PackedBitMatrix::from_signs_of(target)
}

/// Linearized code objective `−2 tr(Bᵀ target)` (constants dropped).
pub fn linearized_code_objective(codes: &PackedBitMatrix, target: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for r in 0..target.rows() {
        for (i, v) in target.row(r).iter().enumerate() {
            s += f64::from(codes.get(r, i)) * v;
        }
    }
    -2.0 * s
}

/// Per-cluster bit sums `S = B Fᵀ` (column-major, `K` entries per cluster)
/// and cluster sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    bits: usize,
    sums: Vec<i64>,
    counts: Vec<usize>,
}

impl ClusterStats {
    pub fn new(codes: &PackedBitMatrix, assignments: &Assignments) -> Self {
        let k = codes.rows();
        let c = assignments.clusters();
        let mut sums = vec![0i64; k * c];
        let mut counts = vec![0usize; c];
        for (i, &l) in assignments.labels().iter().enumerate() {
            counts[l] += 1;
            let acc = &mut sums[l * k..(l + 1) * k];
            for (wi, &word) in codes.column(i).words().iter().enumerate() {
                let base = wi * WORD_BITS;
                let top = (k - base).min(WORD_BITS);
                for (bit, a) in acc[base..base + top].iter_mut().enumerate() {
                    *a += if (word >> bit) & 1 == 1 { 1 } else { -1 };
                }
            }
        }
        Self { bits: k, sums, counts }
    }

    #[inline]
    pub fn sum(&self, k: usize, j: usize) -> i64 {
        self.sums[j * self.bits + k]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

fn column_sums(q: &PackedBitMatrix) -> Vec<i64> {
    (0..q.cols())
        .map(|j| {
            let pos = i64::from(q.column(j).words().iter().map(|w| w.count_ones()).sum::<u32>());
            2 * pos - q.rows() as i64
        })
        .collect()
}

/// Centroid loss `−2 tr(Bᵀ D Q F) + ν ‖Qᵀ𝟙‖²` (constants dropped).
pub fn centroid_loss(q: &PackedBitMatrix, stats: &ClusterStats, d: &BitRowWeights, nu: f64) -> f64 {
    let w = d.as_slice();
    let mut data = 0.0;
    for j in 0..q.cols() {
        for (k, &wk) in w.iter().enumerate() {
            data += wk * stats.sum(k, j) as f64 * f64::from(q.get(k, j));
        }
    }
    let balance: f64 = column_sums(q).iter().map(|&s| (s * s) as f64).sum();
    -2.0 * data + nu * balance
}

/// Gradient of [`centroid_loss`]: `−2 D B Fᵀ + 2ν 𝟙𝟙ᵀ Q` (`K × c`).
pub fn centroid_gradient(q: &PackedBitMatrix, stats: &ClusterStats, d: &BitRowWeights, nu: f64) -> DenseMatrix {
    let sums = column_sums(q);
    let w = d.as_slice();
    DenseMatrix::from_fn(q.rows(), q.cols(), |k, j| {
        -2.0 * w[k] * stats.sum(k, j) as f64 + 2.0 * nu * sums[j] as f64
    })
}

/// Outcome of one centroid update.
#[derive(Debug, Clone)]
pub struct CentroidStep {
    pub centroids: PackedBitMatrix,
    /// Loss at entry followed by the loss after every accepted step.
    pub loss_trace: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// The last proposal left `Q` unchanged, i.e. `Q` is a fixed point of
    /// the proximal map at the returned `η`.
    pub converged: bool,
}

impl CentroidStep {
    pub fn changed(&self) -> bool {
        self.accepted > 0
    }
}

/// Sign-projected proximal gradient iterations on the centroids,
/// `Q ← sgn(Q − ∇L(Q)/η)`, with `B`, `F`, `D` fixed.
///
/// A step that raises the loss is rejected and retried with `η` doubled
/// (at most [`ETA_MAX_RETRIES`] times); an accepted step relaxes `η` by
/// [`ETA_RELAX`] down to [`ETA_FLOOR`]. Iteration stops when the update no
/// longer changes `Q` or after `max_steps` accepted steps. Columns of empty
/// clusters are left untouched.
pub fn update_q(
    q: &PackedBitMatrix,
    codes: &PackedBitMatrix,
    assignments: &Assignments,
    d: &BitRowWeights,
    nu: f64,
    eta: &mut f64,
    max_steps: usize,
) -> CentroidStep {
    let stats = ClusterStats::new(codes, assignments);
    let mut current = q.clone();
    let mut loss = centroid_loss(&current, &stats, d, nu);
    let mut trace = vec![loss];
    let (mut accepted, mut rejected) = (0, 0);
    let mut converged = false;
    'outer: while accepted < max_steps {
        let grad = centroid_gradient(&current, &stats, d, nu);
        let mut retries = 0;
        loop {
            let candidate = PackedBitMatrix::from_fn(current.rows(), current.cols(), |k, j| {
                let old = f64::from(current.get(k, j));
                if stats.counts()[j] == 0 {
                    old > 0.0
                } else {
                    old - grad.get(k, j) / *eta >= 0.0
                }
            });
            if candidate == current {
                converged = true;
                break 'outer;
            }
            let cand_loss = centroid_loss(&candidate, &stats, d, nu);
            if cand_loss <= loss {
                current = candidate;
                loss = cand_loss;
                trace.push(loss);
                accepted += 1;
                *eta = (*eta * ETA_RELAX).max(ETA_FLOOR);
                break;
            }
            rejected += 1;
            *eta *= ETA_GROW;
            retries += 1;
            if retries > ETA_MAX_RETRIES {
                break 'outer;
            }
        }
    }
    CentroidStep {
        centroids: current,
        loss_trace: trace,
        accepted,
        rejected,
        converged,
    }
}

/// Assignment update: each sample goes to the centroid with the smallest
/// `D`-weighted Hamming distance, ties to the lowest index.
pub fn update_f(codes: &PackedBitMatrix, q: &PackedBitMatrix, d: &BitRowWeights) -> Assignments {
    let w = d.as_slice();
    let labels: Vec<usize> = (0..codes.cols())
        .into_par_iter()
        .map(|i| nearest_weighted_unchecked(codes.column(i).words(), q, w).0)
        .collect();
    Assignments::new(labels, q.cols()).expect("nearest centroid is in range")
}

/// Number of samples disagreeing with their centroid, per bit row.
pub fn row_mismatches(codes: &PackedBitMatrix, q: &PackedBitMatrix, assignments: &Assignments) -> Vec<u64> {
    let k = codes.rows();
    let mut counts = vec![0u64; k];
    for (i, &l) in assignments.labels().iter().enumerate() {
        let a = codes.column(i).words();
        let b = q.column(l).words();
        for (wi, (x, y)) in a.iter().zip(b).enumerate() {
            let mut diff = x ^ y;
            while diff != 0 {
                counts[wi * WORD_BITS + diff.trailing_zeros() as usize] += 1;
                diff &= diff - 1;
            }
        }
    }
    counts
}

/// ℓ21 reweighting `d_k = 1 / (2 max(‖u^k‖, ε))` with `U = B − QF`.
/// Each mismatch contributes `(±2)²` to `‖u^k‖²`.
pub fn update_d(codes: &PackedBitMatrix, q: &PackedBitMatrix, assignments: &Assignments) -> BitRowWeights {
    let w = row_mismatches(codes, q, assignments)
        .into_iter()
        .map(|m| 1.0 / (2.0 * (2.0 * (m as f64).sqrt()).max(ROW_NORM_FLOOR)))
        .collect();
    BitRowWeights::new(w).expect("weights are positive and finite")
}

/// `‖B − QF‖₂₁ = Σ_k ‖u^k‖`.
pub fn l21_residual(codes: &PackedBitMatrix, q: &PackedBitMatrix, assignments: &Assignments) -> f64 {
    row_mismatches(codes, q, assignments)
        .into_iter()
        .map(|m| 2.0 * (m as f64).sqrt())
        .sum()
}

/// Weighted surrogate `Σ_k d_k ‖u^k‖²` minimized column-wise by
/// [`update_f`].
pub fn weighted_residual(
    codes: &PackedBitMatrix,
    q: &PackedBitMatrix,
    assignments: &Assignments,
    d: &BitRowWeights,
) -> f64 {
    row_mismatches(codes, q, assignments)
        .into_iter()
        .zip(d.as_slice())
        .map(|(m, w)| w * 4.0 * m as f64)
        .sum()
}

/// Closed-form view weights `α^v ∝ (h^v)^{1/(1−r)}`, computed in log space.
/// Losses are clamped to [`VIEW_LOSS_FLOOR`].
pub fn update_alpha(losses: &[f64], r: f64) -> Vec<f64> {
    let expo = 1.0 / (1.0 - r);
    let logs: Vec<f64> = losses.iter().map(|h| expo * h.max(VIEW_LOSS_FLOOR).ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    let mut alpha: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // push the rounding residue onto the largest weight
    let residue = 1.0 - alpha.iter().sum::<f64>();
    if let Some(max_i) = (0..alpha.len()).max_by(|&a, &b| alpha[a].total_cmp(&alpha[b])) {
        alpha[max_i] += residue;
    }
    alpha
}

/// Per-view loss `‖B − Y_v‖² + λ₁ ‖P^v‖² − (λ₂/N) ‖Y_v‖²`, where
/// `Y_v = (P^v)ᵀψ_v` and `(λ₂/N)‖Y_v‖²` equals `λ₂ g(P^v)`.
pub fn view_losses(
    codes_dense: &DenseMatrix,
    projections: &[DenseMatrix],
    p_shared: &DenseMatrix,
    p_individual: &[DenseMatrix],
    hyper: &Hyperparams,
) -> Vec<f64> {
    let shared_sq = p_shared.frobenius_norm_sq();
    projections
        .iter()
        .zip(p_individual)
        .map(|(y, pi)| {
            let fit: f64 = codes_dense
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(b, p)| (b - p) * (b - p))
                .sum();
            fit + hyper.lambda1 * (shared_sq + pi.frobenius_norm_sq()) - hyper.lambda2_over_n * y.frobenius_norm_sq()
        })
        .collect()
}

/// Full joint objective from precomputed projections.
#[allow(clippy::too_many_arguments)]
pub(crate) fn objective_from_parts(
    codes: &PackedBitMatrix,
    projections: &[DenseMatrix],
    p_shared: &DenseMatrix,
    p_individual: &[DenseMatrix],
    alpha: &[f64],
    centroids: &PackedBitMatrix,
    assignments: &Assignments,
    hyper: &Hyperparams,
) -> f64 {
    let dense = codes.unpack();
    let h = view_losses(&dense, projections, p_shared, p_individual, hyper);
    let views: f64 = h.iter().zip(view_factors(alpha, hyper.r)).map(|(h, w)| w * h).sum();
    views + hyper.lambda3 * l21_residual(codes, centroids, assignments)
}

/// Moves the farthest sample (plain Hamming to its centroid, taken from a
/// cluster with more than one member) into each empty cluster and makes it
/// that cluster's centroid. Returns the number of clusters re-seeded.
pub fn repair_empty_clusters(codes: &PackedBitMatrix, q: &mut PackedBitMatrix, assignments: &mut Assignments) -> usize {
    let mut sizes = assignments.cluster_sizes();
    let mut repaired = 0;
    for j in 0..sizes.len() {
        if sizes[j] > 0 {
            continue;
        }
        let mut best: Option<(usize, u32)> = None;
        for (i, &l) in assignments.labels().iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = hamming_unchecked(codes.column(i).words(), q.column(l).words());
            if d > 0 && best.is_none_or(|b| d > b.1) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            sizes[assignments.labels()[i]] -= 1;
            sizes[j] = 1;
            assignments.set(i, j);
            q.set_column(j, codes.column(i));
            repaired += 1;
        }
    }
    repaired
}
