//! Subcommand definitions and their implementations.

use crate::io::{self, MatrixFormat};
use crate::model_io;
use crate::report::{self, BenchReport, BenchRow, EvalReport, EvalRun, FitReport, MemoryReport, Scores};
use crate::synth::{generate_synthetic, SynthConfig};
use crate::{CliError, Result};
use clap::{Args, Parser, Subcommand};
use hamclust::optimizer::predict;
use hamclust::rng::derive_seed;
use hamclust::{baselines, fit, metrics, DenseMatrix, FitResult, Hyperparams, MultiViewDataset};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "hamclust",
    version,
    about = "Multi-view clustering with compact binary codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with a JSON report and training labels.
    Fit(FitArgs),
    /// Score clusterings against ground truth, averaged over restarts.
    Eval(EvalArgs),
    /// Assign new samples with a saved model.
    Predict(PredictArgs),
    /// Time HSIC against the baselines over a sweep of sample counts.
    Bench(BenchArgs),
    /// Write a synthetic multi-view dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// View feature file (CSV or MVMX); repeat once per view.
    #[arg(long = "view", value_name = "PATH", required = true)]
    pub views: Vec<PathBuf>,
    /// Ground-truth labels, one integer per line.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Code length in bits.
    #[arg(long = "k", default_value_t = 128)]
    pub code_bits: usize,
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda1: f64,
    /// Entropy-regularizer weight divided by N.
    #[arg(long = "lambda2n", default_value_t = 1e-3)]
    pub lambda2_over_n: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub lambda3: f64,
    /// View-weight exponent.
    #[arg(long, default_value_t = 5.0)]
    pub r: f64,
    /// Fraction of shared bits.
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Centroid balance penalty [default: 1e-3·N/c].
    #[arg(long)]
    pub nu: Option<f64>,
    /// Anchors per view [default: min(1000, N)].
    #[arg(long)]
    pub anchors: Option<usize>,
    /// Outer iterations.
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Inner centroid/assignment rounds.
    #[arg(long, default_value_t = 10)]
    pub inner: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl HyperArgs {
    pub fn to_hyper(&self) -> Result<Hyperparams> {
        let hyper = Hyperparams {
            code_bits: self.code_bits,
            shared_ratio: self.delta,
            lambda1: self.lambda1,
            lambda2_over_n: self.lambda2_over_n,
            lambda3: self.lambda3,
            r: self.r,
            nu: self.nu,
            outer_iters: self.iters,
            inner_iters: self.inner,
            clusters: self.clusters,
            anchors: self.anchors,
            seed: self.seed,
        };
        hyper.validate()?;
        Ok(hyper)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Output directory for model.hsic, report.json and labels.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// View feature files; not needed with --pred.
    #[arg(long = "view", value_name = "PATH")]
    pub views: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
    /// Score this predicted-label file instead of fitting.
    #[arg(long, value_name = "PATH")]
    pub pred: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Directory for eval.json; the report is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Query feature file per view, in training order.
    #[arg(long = "view", value_name = "PATH", required = true)]
    pub views: Vec<PathBuf>,
    /// Output directory for labels.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Sample counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "2000,4000,8000")]
    pub sizes: Vec<usize>,
    /// Feature dimension of each synthetic view.
    #[arg(long, value_delimiter = ',', default_value = "20,20,20")]
    pub dims: Vec<usize>,
    /// Timed runs per size; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    /// Feature dimension of each view.
    #[arg(long, value_delimiter = ',', default_value = "20,20,20")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 12)]
    pub latent: usize,
    /// Rank of each view's map from the latent space (0 = full).
    #[arg(long, default_value_t = 6)]
    pub rank: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
    #[arg(long)]
    pub out: PathBuf,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn scores(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    Ok(metrics::score(pred, truth)?.into())
}

/// Output of [`cmd_fit`].
pub struct FitOutcome {
    pub result: FitResult,
    pub report: FitReport,
}

pub fn cmd_fit(args: &FitArgs) -> Result<FitOutcome> {
    let hyper = args.hyper.to_hyper()?;
    let dataset = io::load_views(&args.data.views, args.data.labels.as_deref())?;
    let result = fit(&dataset, &hyper)?;
    let sc = match dataset.labels() {
        Some(truth) => Some(scores(result.assignments.labels(), truth)?),
        None => None,
    };
    let report = FitReport::new(&result, &dataset, sc);
    ensure_dir(&args.out)?;
    model_io::save_model(&args.out.join("model.hsic"), &result.model)?;
    io::write_labels(&args.out.join("labels.csv"), result.assignments.labels())?;
    write_json(&args.out.join("report.json"), &report)?;
    Ok(FitOutcome { result, report })
}

/// Seed of restart `i`; every restart resamples anchors and initialization.
pub fn restart_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, "restart", i as u64)
}

/// Fits `restarts` times with derived seeds and scores each run.
pub fn evaluate_restarts(dataset: &MultiViewDataset, hyper: &Hyperparams, restarts: usize) -> Result<EvalReport> {
    let truth = dataset.labels().ok_or_else(|| CliError::Config {
        field: "labels",
        reason: "ground-truth labels are required for evaluation".into(),
    })?;
    if restarts == 0 {
        return Err(CliError::Config {
            field: "restarts",
            reason: "must be at least 1".into(),
        });
    }
    let mut runs = Vec::with_capacity(restarts);
    for i in 0..restarts {
        let seed = restart_seed(hyper.seed, i);
        let h = Hyperparams { seed, ..hyper.clone() };
        let t0 = Instant::now();
        let result = fit(dataset, &h)?;
        runs.push(EvalRun {
            seed,
            scores: scores(result.assignments.labels(), truth)?,
            iterations: result.iterations,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(EvalReport::new(dataset.num_samples(), runs))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let report = if let Some(pred_path) = &args.pred {
        let Some(labels) = &args.labels else {
            return Err(CliError::Config {
                field: "labels",
                reason: "--pred requires --labels".into(),
            });
        };
        let pred = io::read_labels(pred_path)?;
        let truth = io::read_labels(labels)?;
        let sc = scores(&pred, &truth)?;
        EvalReport::new(
            truth.len(),
            vec![EvalRun {
                seed: args.hyper.seed,
                scores: sc,
                iterations: 0,
                wall_ms: 0.0,
            }],
        )
    } else {
        if args.views.is_empty() {
            return Err(CliError::Config {
                field: "view",
                reason: "at least one --view is required unless --pred is given".into(),
            });
        }
        let hyper = args.hyper.to_hyper()?;
        let dataset = io::load_views(&args.views, args.labels.as_deref())?;
        evaluate_restarts(&dataset, &hyper, args.restarts)?
    };
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("eval.json"), &report)?;
    }
    Ok(report)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<usize>> {
    let model = model_io::load_model(&args.model)?;
    let views: Vec<DenseMatrix> = args
        .views
        .iter()
        .map(|p| io::read_view(p).map(|v| v.features))
        .collect::<Result<_>>()?;
    let refs: Vec<Option<&DenseMatrix>> = views.iter().map(Some).collect();
    let labels = predict(&model, &refs)?.into_labels();
    ensure_dir(&args.out)?;
    io::write_labels(&args.out.join("labels.csv"), &labels)?;
    Ok(labels)
}

/// One timed comparison at a single sample count.
pub fn bench_row(dataset: &MultiViewDataset, hyper: &Hyperparams, repeats: usize) -> Result<BenchRow> {
    let c = hyper.clusters;
    let concat = dataset.concatenated();
    let (mut hsic, mut km, mut bkm) = (Vec::new(), Vec::new(), Vec::new());
    let mut memory = None;
    for rep in 0..repeats.max(1) {
        let h = Hyperparams {
            seed: restart_seed(hyper.seed, rep),
            ..hyper.clone()
        };
        let t0 = Instant::now();
        let result = fit(dataset, &h)?;
        hsic.push(t0.elapsed().as_secs_f64() * 1e3);
        memory.get_or_insert_with(|| MemoryReport::of_fit(&result, dataset));

        let t0 = Instant::now();
        baselines::kmeans(&concat, c, h.outer_iters * h.inner_iters, h.seed)?;
        km.push(t0.elapsed().as_secs_f64() * 1e3);

        let t0 = Instant::now();
        baselines::binary_kmeans(&result.state.codes, c, h.outer_iters * h.inner_iters, h.seed)?;
        bkm.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    Ok(BenchRow {
        samples: dataset.num_samples(),
        total_dim: dataset.dims().iter().sum(),
        hsic_ms: report::median(&hsic),
        kmeans_ms: report::median(&km),
        binary_kmeans_ms: report::median(&bkm),
        hsic_ratio: None,
        memory: memory.expect("at least one repeat"),
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let hyper = args.hyper.to_hyper()?;
    if args.sizes.is_empty() {
        return Err(CliError::Config {
            field: "sizes",
            reason: "needs at least one sample count".into(),
        });
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for &n in &args.sizes {
        let cfg = SynthConfig {
            clusters: hyper.clusters,
            samples: n,
            dims: args.dims.clone(),
            seed: derive_seed(hyper.seed, "bench", n as u64),
            ..SynthConfig::default()
        };
        let dataset = generate_synthetic(&cfg)?;
        let mut row = bench_row(&dataset, &hyper, args.repeats)?;
        row.hsic_ratio = rows.last().map(|prev| row.hsic_ms / prev.hsic_ms);
        rows.push(row);
    }
    let report = BenchReport {
        report_version: report::REPORT_VERSION,
        repeats: args.repeats.max(1),
        code_bits: hyper.code_bits,
        clusters: hyper.clusters,
        views: args.dims.len(),
        rows,
    };
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("bench.json"), &report)?;
    }
    Ok(report)
}

/// Writes `view0..` files plus `labels.csv`; returns the view paths.
pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let cfg = SynthConfig {
        clusters: args.clusters,
        samples: args.samples,
        dims: args.dims.clone(),
        latent_dim: args.latent,
        view_rank: (args.rank > 0).then_some(args.rank),
        separation: args.separation,
        noise: args.noise,
        seed: args.seed,
    };
    let dataset = generate_synthetic(&cfg)?;
    ensure_dir(&args.out)?;
    let ext = match args.format {
        MatrixFormat::Csv => "csv",
        MatrixFormat::Mvmx => "mvmx",
    };
    let mut paths = Vec::new();
    for (v, x) in dataset.views().iter().enumerate() {
        let path = args.out.join(format!("view{v}.{ext}"));
        io::write_view(&path, args.format, x, None)?;
        paths.push(path);
    }
    io::write_labels(
        &args.out.join("labels.csv"),
        dataset.labels().expect("synthetic data is labeled"),
    )?;
    Ok(paths)
}

/// Parses `HAMCLUST_THREADS`; `0` or unset means automatic.
pub fn thread_count(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(CliError::Config {
                field: "HAMCLUST_THREADS",
                reason: format!("`{s}` is not a thread count"),
            }),
        },
    }
}

/// Runs a parsed command and prints its summary.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => {
            let out = cmd_fit(&a)?;
            let r = &out.report;
            println!(
                "fit: {} samples, {} iterations, objective {:.6e}",
                r.samples,
                r.iterations,
                r.objective_trace.last().copied().unwrap_or(f64::NAN)
            );
            if let Some(s) = r.scores {
                println!(
                    "acc {:.4}  nmi {:.4}  purity {:.4}  f {:.4}",
                    s.acc, s.nmi, s.purity, s.f_score
                );
            }
            println!("wrote {}", a.out.display());
        }
        Command::Eval(a) => {
            let report = cmd_eval(&a)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Predict(a) => {
            let labels = cmd_predict(&a)?;
            println!(
                "predicted {} samples into {}",
                labels.len(),
                a.out.join("labels.csv").display()
            );
        }
        Command::Bench(a) => {
            let report = cmd_bench(&a)?;
            print!("{}", report.table());
        }
        Command::Synth(a) => {
            let paths = cmd_synth(&a)?;
            println!("wrote {} views to {}", paths.len(), a.out.display());
        }
    }
    Ok(())
}
