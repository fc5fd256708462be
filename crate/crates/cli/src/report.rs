//! JSON reports written by the subcommands.

use hamclust::metrics::ClusteringScores;
use hamclust::optimizer::{Diagnostics, StepTimings};
use hamclust::{FitResult, Hyperparams, MultiViewDataset};
use serde::Serialize;
use std::time::Duration;

/// Bumped whenever a field is renamed or removed.
pub const REPORT_VERSION: u32 = 1;

pub const NMI_VARIANT: &str = "sqrt";
pub const F_SCORE_VARIANT: &str = "pairwise";

#[derive(Debug, Clone, Serialize)]
pub struct HyperReport {
    pub code_bits: usize,
    pub shared_bits: usize,
    pub individual_bits: usize,
    pub lambda1: f64,
    pub lambda2_over_n: f64,
    pub lambda3: f64,
    pub r: f64,
    pub nu: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub clusters: usize,
    pub anchors: usize,
    pub seed: u64,
}

impl HyperReport {
    /// `hyper` must have `nu` and `anchors` resolved, as in a fitted model.
    pub fn new(hyper: &Hyperparams, n: usize) -> Self {
        Self {
            code_bits: hyper.code_bits,
            shared_bits: hyper.shared_bits(),
            individual_bits: hyper.individual_bits(),
            lambda1: hyper.lambda1,
            lambda2_over_n: hyper.lambda2_over_n,
            lambda3: hyper.lambda3,
            r: hyper.r,
            nu: hyper.resolved_nu(n),
            outer_iters: hyper.outer_iters,
            inner_iters: hyper.inner_iters,
            clusters: hyper.clusters,
            anchors: hyper.resolved_anchors(n),
            seed: hyper.seed,
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Serialize)]
pub struct WallMs {
    pub embed: f64,
    pub init: f64,
    pub p_shared: f64,
    pub p_individual: f64,
    pub codes: f64,
    pub clusters: f64,
    pub alpha: f64,
    pub total: f64,
}

impl From<&StepTimings> for WallMs {
    fn from(t: &StepTimings) -> Self {
        Self {
            embed: ms(t.embed),
            init: ms(t.init),
            p_shared: ms(t.p_shared),
            p_individual: ms(t.p_individual),
            codes: ms(t.codes),
            clusters: ms(t.clusters),
            alpha: ms(t.alpha),
            total: ms(t.total()),
        }
    }
}

/// Structural byte counts of the stored representations.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MemoryReport {
    /// Packed codes `B`.
    pub code_bytes: usize,
    /// Packed centroids `Q`.
    pub centroid_bytes: usize,
    /// Shared and individual projections.
    pub projection_bytes: usize,
    /// Concatenated features stored as `f64`.
    pub feature_bytes: usize,
    /// Centroids of the same clustering stored as `f64` in feature space.
    pub float_centroid_bytes: usize,
    /// `feature_bytes / code_bytes`.
    pub data_reduction: f64,
    /// `float_centroid_bytes / centroid_bytes`.
    pub centroid_reduction: f64,
}

impl MemoryReport {
    pub fn new(samples: usize, total_dim: usize, clusters: usize, code_bits: usize, projection_bytes: usize) -> Self {
        let words = code_bits.div_ceil(64);
        let code_bytes = samples * words * 8;
        let centroid_bytes = clusters * words * 8;
        let feature_bytes = samples * total_dim * 8;
        let float_centroid_bytes = clusters * total_dim * 8;
        Self {
            code_bytes,
            centroid_bytes,
            projection_bytes,
            feature_bytes,
            float_centroid_bytes,
            data_reduction: feature_bytes as f64 / code_bytes as f64,
            centroid_reduction: float_centroid_bytes as f64 / centroid_bytes as f64,
        }
    }

    pub fn of_fit(result: &FitResult, dataset: &MultiViewDataset) -> Self {
        let mut m = Self::new(
            dataset.num_samples(),
            dataset.dims().iter().sum(),
            result.model.clusters(),
            result.model.code_bits(),
            result.model.projection_bytes(),
        );
        // measured from the actual containers rather than the formula
        m.code_bytes = result.state.codes.memory_bytes();
        m.centroid_bytes = result.model.centroids.memory_bytes();
        m.data_reduction = m.feature_bytes as f64 / m.code_bytes as f64;
        m.centroid_reduction = m.float_centroid_bytes as f64 / m.centroid_bytes as f64;
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub monotonicity_violations: usize,
    pub centroid_steps_accepted: usize,
    pub centroid_steps_rejected: usize,
    pub inner_rounds: usize,
    pub clusters_repaired: usize,
}

impl From<&Diagnostics> for DiagnosticsReport {
    fn from(d: &Diagnostics) -> Self {
        Self {
            monotonicity_violations: d.violations(),
            centroid_steps_accepted: d.centroid_steps_accepted,
            centroid_steps_rejected: d.centroid_steps_rejected,
            inner_rounds: d.inner_rounds,
            clusters_repaired: d.clusters_repaired,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    pub f_score: f64,
}

impl From<ClusteringScores> for Scores {
    fn from(s: ClusteringScores) -> Self {
        Self {
            acc: s.acc,
            nmi: s.nmi,
            purity: s.purity,
            f_score: s.f_score,
        }
    }
}

impl Scores {
    fn map(runs: &[Scores], f: impl Fn(&[f64]) -> f64) -> Scores {
        let col = |g: fn(&Scores) -> f64| f(&runs.iter().map(g).collect::<Vec<_>>());
        Scores {
            acc: col(|s| s.acc),
            nmi: col(|s| s.nmi),
            purity: col(|s| s.purity),
            f_score: col(|s| s.f_score),
        }
    }

    pub fn mean(runs: &[Scores]) -> Scores {
        Self::map(runs, mean)
    }

    /// Population standard deviation.
    pub fn std(runs: &[Scores]) -> Scores {
        Self::map(runs, std_dev)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    mean(&xs.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>()).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub report_version: u32,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub hyper: HyperReport,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub alpha: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub wall_ms: WallMs,
    pub memory: MemoryReport,
    pub diagnostics: DiagnosticsReport,
    pub degenerate_view: bool,
    /// Present when ground-truth labels were supplied.
    pub scores: Option<Scores>,
}

impl FitReport {
    pub fn new(result: &FitResult, dataset: &MultiViewDataset, scores: Option<Scores>) -> Self {
        Self {
            report_version: REPORT_VERSION,
            samples: dataset.num_samples(),
            dims: dataset.dims(),
            hyper: HyperReport::new(&result.model.hyper, dataset.num_samples()),
            iterations: result.iterations,
            objective_trace: result.objective_trace().to_vec(),
            alpha: result.model.alpha.clone(),
            cluster_sizes: result.assignments.cluster_sizes(),
            wall_ms: (&result.timings).into(),
            memory: MemoryReport::of_fit(result, dataset),
            diagnostics: (&result.diagnostics).into(),
            degenerate_view: result.degenerate,
            scores,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRun {
    pub seed: u64,
    pub scores: Scores,
    pub iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub nmi_variant: &'static str,
    pub f_score_variant: &'static str,
    pub samples: usize,
    pub restarts: usize,
    pub runs: Vec<EvalRun>,
    pub mean: Scores,
    pub std: Scores,
}

impl EvalReport {
    pub fn new(samples: usize, runs: Vec<EvalRun>) -> Self {
        let scores: Vec<Scores> = runs.iter().map(|r| r.scores).collect();
        Self {
            report_version: REPORT_VERSION,
            nmi_variant: NMI_VARIANT,
            f_score_variant: F_SCORE_VARIANT,
            samples,
            restarts: runs.len(),
            mean: Scores::mean(&scores),
            std: Scores::std(&scores),
            runs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub samples: usize,
    pub total_dim: usize,
    /// Median over repeats.
    pub hsic_ms: f64,
    pub kmeans_ms: f64,
    pub binary_kmeans_ms: f64,
    /// HSIC time relative to the previous row; `None` on the first row.
    pub hsic_ratio: Option<f64>,
    pub memory: MemoryReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub report_version: u32,
    pub repeats: usize,
    pub code_bits: usize,
    pub clusters: usize,
    pub views: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Plain-text table: times, then memory and reduction factors.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>8} {:>7} {:>11} {:>11} {:>11} {:>7} {:>12} {:>12} {:>10} {:>10}\n",
            "N",
            "dim",
            "hsic_ms",
            "kmeans_ms",
            "bkmeans_ms",
            "ratio",
            "feat_bytes",
            "code_bytes",
            "data_red",
            "cent_red"
        );
        for r in &self.rows {
            let ratio = r.hsic_ratio.map_or("-".to_string(), |x| format!("{x:.2}"));
            s += &format!(
                "{:>8} {:>7} {:>11.1} {:>11.1} {:>11.1} {:>7} {:>12} {:>12} {:>9.1}x {:>9.1}x\n",
                r.samples,
                r.total_dim,
                r.hsic_ms,
                r.kmeans_ms,
                r.binary_kmeans_ms,
                ratio,
                r.memory.feature_bytes,
                r.memory.code_bytes,
                r.memory.data_reduction,
                r.memory.centroid_reduction
            );
        }
        s
    }
}

/// Median of a non-empty sample.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
