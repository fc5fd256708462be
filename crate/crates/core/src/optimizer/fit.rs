use super::model::{Assignments, HsicModel, TrainState, ViewEmbedding};
use super::params::Hyperparams;
use super::steps::{self, CentroidStep};
use crate::baselines::{kmeanspp_seeds, majority_centroids};
use crate::bitcode::{hamming_unchecked, nearest_hamming_unchecked, PackedBitMatrix};
use crate::error::{Error, Result};
use crate::kernel::{KernelMap, MultiViewDataset};
use crate::numeric::{matmul_tn, DenseMatrix};
use crate::rng::substream;
use rand_distr::{Distribution, StandardNormal};
use std::time::{Duration, Instant};

/// Relative objective change below which the outer loop stops early.
pub const CONVERGENCE_TOL: f64 = 1e-5;
/// Relative slack allowed when checking per-step monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Wall-clock spent in each step, summed over iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepTimings {
    pub embed: Duration,
    pub init: Duration,
    pub p_shared: Duration,
    pub p_individual: Duration,
    pub codes: Duration,
    pub clusters: Duration,
    pub alpha: Duration,
}

impl StepTimings {
    pub fn total(&self) -> Duration {
        self.embed + self.init + self.p_shared + self.p_individual + self.codes + self.clusters + self.alpha
    }
}

/// Per-step descent checks recorded during a fit. Every step is an exact
/// or guarded minimizer of its own subproblem, so all violation counters
/// should stay at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Code updates that raised the linearized code objective.
    pub code_step_violations: usize,
    /// Assignment updates that raised the weighted residual.
    pub assign_step_violations: usize,
    /// Accepted centroid steps that raised the centroid loss.
    pub centroid_step_violations: usize,
    pub centroid_steps_accepted: usize,
    pub centroid_steps_rejected: usize,
    pub inner_rounds: usize,
    pub clusters_repaired: usize,
    /// Centroid-loss values compared across accepted steps.
    pub checks: usize,
}

impl Diagnostics {
    pub fn violations(&self) -> usize {
        self.code_step_violations + self.assign_step_violations + self.centroid_step_violations
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: HsicModel,
    pub assignments: Assignments,
    pub state: TrainState,
    /// Centered training embeddings, one per view.
    pub embeddings: Vec<ViewEmbedding>,
    pub diagnostics: Diagnostics,
    pub timings: StepTimings,
    /// Outer iterations actually run.
    pub iterations: usize,
    /// Some view had all samples identical.
    pub degenerate: bool,
}

impl FitResult {
    pub fn objective_trace(&self) -> &[f64] {
        &self.state.objective_trace
    }
}

fn exceeds(new: f64, old: f64) -> bool {
    new > old + MONOTONE_SLACK * old.abs().max(1.0)
}

/// Fits kernel maps on every view and returns the training embeddings.
pub fn embed_views(
    dataset: &MultiViewDataset,
    l: usize,
    seed: u64,
) -> Result<(Vec<KernelMap>, Vec<ViewEmbedding>, bool)> {
    let mut maps = Vec::with_capacity(dataset.num_views());
    let mut embeddings = Vec::with_capacity(dataset.num_views());
    let mut degenerate = false;
    for (v, x) in dataset.views().iter().enumerate() {
        let mut rng = substream(seed, "anchors", v as u64);
        let fit = KernelMap::fit(x, l, &mut rng)?;
        degenerate |= fit.degenerate;
        maps.push(fit.map);
        embeddings.push(ViewEmbedding::new(fit.embedding)?);
    }
    Ok((maps, embeddings, degenerate))
}

/// Initial codes from a random Gaussian projection of the embeddings,
/// assignments from Hamming k-means++ seeding, centroids by majority vote.
fn initialize(
    embeddings: &[ViewEmbedding],
    hyper: &Hyperparams,
) -> Result<(PackedBitMatrix, PackedBitMatrix, Assignments)> {
    let k = hyper.code_bits;
    let c = hyper.clusters;
    let mut rng = substream(hyper.seed, "init", 0);
    let n = embeddings[0].num_samples();
    let mut z = DenseMatrix::zeros(k, n);
    for e in embeddings {
        let r = DenseMatrix::from_fn(e.dim(), k, |_, _| StandardNormal.sample(&mut rng));
        z.add_scaled(1.0, &matmul_tn(&r, e.psi())?)?;
    }
    let codes = PackedBitMatrix::from_signs_of(&z);
    let seeds = kmeanspp_seeds(n, c, &mut rng, |i, j| {
        let h = f64::from(hamming_unchecked(codes.column(i).words(), codes.column(j).words()));
        h * h
    });
    let mut q = PackedBitMatrix::new(k, c);
    for (j, &s) in seeds.iter().enumerate() {
        q.set_column(j, codes.column(s));
    }
    let labels = (0..n)
        .map(|i| nearest_hamming_unchecked(codes.column(i).words(), &q).0)
        .collect();
    let mut assignments = Assignments::new(labels, c)?;
    let mut q = majority_centroids(&codes, assignments.labels(), &q);
    steps::repair_empty_clusters(&codes, &mut q, &mut assignments);
    Ok((codes, q, assignments))
}

/// Runs the alternating solver: shared projection, individual projections,
/// codes, an inner centroid/assignment loop, then view weights, for up to
/// `outer_iters` rounds or until the objective settles.
pub fn fit(dataset: &MultiViewDataset, hyper: &Hyperparams) -> Result<FitResult> {
    hyper.validate()?;
    let n = dataset.num_samples();
    let m = dataset.num_views();
    if hyper.clusters > n {
        return Err(Error::config(
            "clusters",
            format!("{} clusters requested for {n} samples", hyper.clusters),
        ));
    }
    let l = hyper.resolved_anchors(n);
    if l > n {
        return Err(Error::config(
            "anchors",
            format!("{l} anchors requested from {n} samples"),
        ));
    }
    let mut hyper = hyper.clone();
    hyper.anchors = Some(l);
    hyper.nu = Some(hyper.resolved_nu(n));
    let nu = hyper.resolved_nu(n);
    let (ks, ki) = (hyper.shared_bits(), hyper.individual_bits());
    let k = hyper.code_bits;

    let mut timings = StepTimings::default();
    let mut diagnostics = Diagnostics::default();

    let t0 = Instant::now();
    let (kernel_maps, embeddings, degenerate) = embed_views(dataset, l, hyper.seed)?;
    let systems = embeddings
        .iter()
        .map(|e| e.individual_system(&hyper))
        .collect::<Result<Vec<_>>>()?;
    timings.embed = t0.elapsed();

    let t0 = Instant::now();
    let (mut codes, mut q, mut assignments) = initialize(&embeddings, &hyper)?;
    let mut d = steps::update_d(&codes, &q, &assignments);
    timings.init = t0.elapsed();

    let mut alpha = vec![1.0 / m as f64; m];
    let mut p_shared = DenseMatrix::zeros(l, ks);
    let mut p_individual = vec![DenseMatrix::zeros(l, ki); m];
    let mut eta = steps::ETA_INIT;
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..hyper.outer_iters {
        iterations += 1;
        let dense = codes.unpack();

        let t0 = Instant::now();
        p_shared = steps::update_p_shared(&embeddings, &dense.row_block(0, ks), &alpha, &hyper)?;
        timings.p_shared += t0.elapsed();

        let t0 = Instant::now();
        let b_individual = dense.row_block(ks, k);
        for ((p, e), sys) in p_individual.iter_mut().zip(&embeddings).zip(&systems) {
            *p = steps::update_p_individual(e, sys, &b_individual)?;
        }
        timings.p_individual += t0.elapsed();

        let t0 = Instant::now();
        let projections = embeddings
            .iter()
            .zip(&p_individual)
            .map(|(e, pi)| steps::project(e, &p_shared, pi))
            .collect::<Result<Vec<_>>>()?;
        let target = steps::code_target(&projections, &alpha, &hyper, &q, &assignments)?;
        let before = steps::linearized_code_objective(&codes, &target);
        codes = steps::update_b(&target);
        if exceeds(steps::linearized_code_objective(&codes, &target), before) {
            diagnostics.code_step_violations += 1;
        }
        timings.codes += t0.elapsed();

        let t0 = Instant::now();
        d = steps::update_d(&codes, &q, &assignments);
        for _ in 0..hyper.inner_iters {
            diagnostics.inner_rounds += 1;
            let step: CentroidStep = steps::update_q(&q, &codes, &assignments, &d, nu, &mut eta, hyper.inner_iters);
            diagnostics.centroid_steps_accepted += step.accepted;
            diagnostics.centroid_steps_rejected += step.rejected;
            diagnostics.checks += step.loss_trace.len();
            diagnostics.centroid_step_violations += step.loss_trace.windows(2).filter(|w| exceeds(w[1], w[0])).count();
            let q_changed = step.changed();
            q = step.centroids;

            let before = steps::weighted_residual(&codes, &q, &assignments, &d);
            let next = steps::update_f(&codes, &q, &d);
            if exceeds(steps::weighted_residual(&codes, &q, &next, &d), before) {
                diagnostics.assign_step_violations += 1;
            }
            let f_changed = next != assignments;
            assignments = next;
            d = steps::update_d(&codes, &q, &assignments);
            if !f_changed && !q_changed {
                break;
            }
        }
        let repaired = steps::repair_empty_clusters(&codes, &mut q, &mut assignments);
        if repaired > 0 {
            diagnostics.clusters_repaired += repaired;
            d = steps::update_d(&codes, &q, &assignments);
        }
        timings.clusters += t0.elapsed();

        let t0 = Instant::now();
        let h = steps::view_losses(&codes.unpack(), &projections, &p_shared, &p_individual, &hyper);
        alpha = steps::update_alpha(&h, hyper.r);
        timings.alpha += t0.elapsed();

        let objective = steps::objective_from_parts(
            &codes,
            &projections,
            &p_shared,
            &p_individual,
            &alpha,
            &q,
            &assignments,
            &hyper,
        );
        let settled = trace
            .last()
            .is_some_and(|&prev| (objective - prev).abs() <= CONVERGENCE_TOL * prev.abs().max(f64::MIN_POSITIVE));
        trace.push(objective);
        if settled {
            break;
        }
    }

    let model = HsicModel {
        p_shared,
        p_individual,
        alpha,
        centroids: q,
        kernel_maps,
        hyper,
    };
    let state = TrainState {
        codes,
        assignments: assignments.clone(),
        row_weights: d,
        eta,
        objective_trace: trace,
    };
    Ok(FitResult {
        model,
        assignments,
        state,
        embeddings,
        diagnostics,
        timings,
        iterations,
        degenerate,
    })
}

/// Joint objective for a model and training state over the given training
/// embeddings.
pub fn evaluate_objective(model: &HsicModel, state: &TrainState, embeddings: &[ViewEmbedding]) -> Result<f64> {
    if embeddings.len() != model.num_views() {
        return Err(Error::Data("embedding count does not match model views".into()));
    }
    if state.codes.rows() != model.code_bits() || embeddings.iter().any(|e| e.num_samples() != state.codes.cols()) {
        return Err(Error::Data("code matrix does not match embeddings".into()));
    }
    let projections = embeddings
        .iter()
        .zip(&model.p_individual)
        .map(|(e, pi)| steps::project(e, &model.p_shared, pi))
        .collect::<Result<Vec<_>>>()?;
    Ok(steps::objective_from_parts(
        &state.codes,
        &projections,
        &model.p_shared,
        &model.p_individual,
        &model.alpha,
        &model.centroids,
        &state.assignments,
        &model.hyper,
    ))
}
