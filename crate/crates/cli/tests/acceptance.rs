//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so that the criteria execute
//! one after another and the timing measurements do not compete with other
//! tests for the CPU. Set `ACCEPTANCE_ONLY=<n>` to run a single criterion and
//! `ACCEPTANCE_STRICT=1` to exit non-zero when any criterion fails; without it
//! the verdicts are reported but the rest of a workspace test run proceeds.

use hamclust::bitcode::{hamming, weighted_hamming};
use hamclust::metrics::{accuracy, f_score, nmi, purity};
use hamclust::numeric::{finite_diff_grad, matmul_nt, matmul_tn};
use hamclust::optimizer::steps::{
    code_target, update_alpha, update_b, update_d, update_f, update_p_individual, update_p_shared,
};
use hamclust::optimizer::{predict, ViewEmbedding};
use hamclust::{baselines, fit, Assignments, BitRowWeights, DenseMatrix, Hyperparams, PackedBitMatrix};
use hamclust_cli::commands::{bench_row, evaluate_restarts, restart_seed};
use hamclust_cli::model_io::{encode_model, load_model, save_model};
use hamclust_cli::report;
use hamclust_cli::synth::{generate_synthetic, SynthConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// Outcome of one criterion: pass/fail plus a one-line summary.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pm1(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

fn random_bits(k: usize, n: usize, r: &mut ChaCha8Rng) -> PackedBitMatrix {
    PackedBitMatrix::from_fn(k, n, |_, _| r.random())
}

fn random_labels(n: usize, c: usize, r: &mut ChaCha8Rng) -> Assignments {
    Assignments::new((0..n).map(|_| r.random_range(0..c)).collect(), c).unwrap()
}

// ---------------------------------------------------------------------------
// 1. step exactness

const STEP_INSTANCES: usize = 250;
const STEP_BUDGET: Duration = Duration::from_secs(60);

/// No single bit flip lowers `−2 tr(Bᵀ(Σ α^r Y + λ₃ QF))`.
fn code_step_ok(r: &mut ChaCha8Rng, k: usize, n: usize, m: usize, c: usize) -> bool {
    let ys: Vec<DenseMatrix> = (0..m)
        .map(|_| DenseMatrix::from_fn(k, n, |_, _| r.random_range(-2.0..2.0)))
        .collect();
    let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let alpha: Vec<f64> = raw.iter().map(|a| a / total).collect();
    let hyper = Hyperparams {
        code_bits: k,
        clusters: c,
        lambda3: r.random_range(0.0..3.0),
        r: r.random_range(1.2..8.0),
        ..Hyperparams::default()
    };
    let q = random_bits(k, c, r);
    let f = random_labels(n, c, r);
    let b = update_b(&code_target(&ys, &alpha, &hyper, &q, &f).unwrap()).unpack();
    let entry = |row: usize, i: usize| {
        let mut t = hyper.lambda3 * f64::from(q.get(row, f.labels()[i]));
        for (y, a) in ys.iter().zip(&alpha) {
            t += a.powf(hyper.r) * y.get(row, i);
        }
        t
    };
    // flipping entry (row, i) changes the objective by 4·b·t
    (0..k).all(|row| (0..n).all(|i| 4.0 * b.get(row, i) * entry(row, i) >= 0.0))
}

/// Labels equal the per-sample brute-force argmin of `¼ Σ d_k (b − q)²`.
fn assign_step_ok(r: &mut ChaCha8Rng, k: usize, n: usize, c: usize) -> bool {
    let b = random_bits(k, n, r);
    let q = random_bits(k, c, r);
    let d = BitRowWeights::new((0..k).map(|_| r.random_range(1e-3..3.0)).collect()).unwrap();
    let got = update_f(&b, &q, &d);
    let (bd, qd) = (b.unpack(), q.unpack());
    (0..n).all(|i| {
        let cost = |j: usize| -> f64 {
            (0..k)
                .map(|row| 0.25 * d.as_slice()[row] * (bd.get(row, i) - qd.get(row, j)).powi(2))
                .sum()
        };
        let best = (1..c).fold(0, |best, j| if cost(j) < cost(best) { j } else { best });
        got.labels()[i] == best
    })
}

/// Weights equal `1 / (2 max(‖row_k(B − QF)‖, 1e-8))` from a dense loop.
fn row_weight_step_ok(r: &mut ChaCha8Rng, k: usize, n: usize, c: usize) -> bool {
    let b = random_bits(k, n, r);
    let q = random_bits(k, c, r);
    let f = random_labels(n, c, r);
    // occasionally make some rows match exactly to exercise the floor
    let q = if r.random_bool(0.2) && n > 0 {
        let mut q = q;
        for i in 0..n {
            for row in 0..k / 2 {
                q.set(row, f.labels()[i], b.get(row, i));
            }
        }
        q
    } else {
        q
    };
    let d = update_d(&b, &q, &f);
    (0..k).all(|row| {
        let sq: f64 = (0..n)
            .map(|i| (pm1(b.get(row, i) > 0) - pm1(q.get(row, f.labels()[i]) > 0)).powi(2))
            .sum();
        d.as_slice()[row] == 1.0 / (2.0 * sq.sqrt().max(1e-8))
    })
}

/// The closed-form weights are no worse than any point of the 0.01 grid.
fn alpha_step_ok(r: &mut ChaCha8Rng, m: usize) -> bool {
    let h: Vec<f64> = (0..m).map(|_| r.random_range(1e-3..1e3)).collect();
    let expo = r.random_range(1.1..10.0);
    let alpha = update_alpha(&h, expo);
    if (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12 || alpha.iter().any(|&a| a <= 0.0) {
        return false;
    }
    let value = |a: &[f64]| a.iter().zip(&h).map(|(a, h)| a.powf(expo) * h).sum::<f64>();
    let got = value(&alpha) * (1.0 - 1e-12);
    match m {
        1 => alpha == [1.0],
        2 => (1..100).all(|i| {
            let a = i as f64 / 100.0;
            got <= value(&[a, 1.0 - a])
        }),
        _ => (1..100).all(|i| {
            (1..100 - i).all(|j| {
                let (a, b) = (i as f64 / 100.0, j as f64 / 100.0);
                got <= value(&[a, b, 1.0 - a - b])
            })
        }),
    }
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let mut failures = [0usize; 4];
    for seed in 0..STEP_INSTANCES as u64 {
        let mut r = rng(seed);
        let k = r.random_range(2..=16);
        let n = r.random_range(1..=32);
        let m = r.random_range(1..=3);
        let c = r.random_range(2..=6);
        failures[0] += usize::from(!code_step_ok(&mut r, k, n, m, c));
        failures[1] += usize::from(!assign_step_ok(&mut r, k, n, c));
        failures[2] += usize::from(!row_weight_step_ok(&mut r, k, n, c));
        failures[3] += usize::from(!alpha_step_ok(&mut r, m));
    }
    let elapsed = t0.elapsed();
    verdict(
        failures.iter().all(|&f| f == 0) && elapsed < STEP_BUDGET,
        format!(
            "{STEP_INSTANCES} instances; failures code/assign/weights/alpha = {failures:?}; {:.2}s (limit 60s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. projection stationarity

const STATIONARITY_INSTANCES: u64 = 25;
const STATIONARITY_TOL: f64 = 1e-5;

fn criterion_2() -> Verdict {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..STATIONARITY_INSTANCES {
        let mut r = rng(1000 + seed);
        let l = r.random_range(2..=16);
        let n = r.random_range(l..=40);
        let m = r.random_range(1..=3);
        let (ks, ki) = (r.random_range(1..=6), r.random_range(1..=6));
        let hyper = Hyperparams {
            code_bits: ks + ki,
            lambda1: r.random_range(1e-3..1.0),
            lambda2_over_n: r.random_range(0.0..0.3),
            r: r.random_range(1.5..6.0),
            ..Hyperparams::default()
        };
        let views: Vec<ViewEmbedding> = (0..m)
            .map(|_| ViewEmbedding::new(DenseMatrix::from_fn(l, n, |_, _| r.random_range(-1.0..1.0))).unwrap())
            .collect();
        let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.1..1.0)).collect();
        let alpha: Vec<f64> = raw.iter().map(|a| a / raw.iter().sum::<f64>()).collect();
        let bs = DenseMatrix::from_fn(ks, n, |_, _| pm1(r.random()));
        let bi = DenseMatrix::from_fn(ki, n, |_, _| pm1(r.random()));

        // shared block: Σ_v α^r (‖B_S − P_Sᵀψ_v‖² + λ₁‖P_S‖² − λ₂/N ‖P_Sᵀψ_v‖²)
        let ps = update_p_shared(&views, &bs, &alpha, &hyper).unwrap();
        let shared = |p: &DenseMatrix| -> f64 {
            views
                .iter()
                .zip(&alpha)
                .map(|(v, a)| {
                    let y = matmul_tn(p, v.psi()).unwrap();
                    let fit: f64 = bs
                        .as_slice()
                        .iter()
                        .zip(y.as_slice())
                        .map(|(b, y)| (b - y).powi(2))
                        .sum();
                    a.powf(hyper.r)
                        * (fit + hyper.lambda1 * p.frobenius_norm_sq() - hyper.lambda2_over_n * y.frobenius_norm_sq())
                })
                .sum()
        };
        let g = finite_diff_grad(shared, &ps, 1e-5).unwrap();
        let mut mixed = DenseMatrix::zeros(l, n);
        for (v, a) in views.iter().zip(&alpha) {
            mixed.add_scaled(a.powf(hyper.r), v.psi()).unwrap();
        }
        let scale = 2.0 * matmul_nt(&mixed, &bs).unwrap().frobenius_norm();
        worst = worst.max(g.frobenius_norm() / scale.max(f64::MIN_POSITIVE));

        // individual block of the first view
        let v = &views[0];
        let pi = update_p_individual(v, &v.individual_system(&hyper).unwrap(), &bi).unwrap();
        let individual = |p: &DenseMatrix| -> f64 {
            let y = matmul_tn(p, v.psi()).unwrap();
            let fit: f64 = bi
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(b, y)| (b - y).powi(2))
                .sum();
            fit + hyper.lambda1 * p.frobenius_norm_sq() - hyper.lambda2_over_n * y.frobenius_norm_sq()
        };
        let g = finite_diff_grad(individual, &pi, 1e-5).unwrap();
        let scale = 2.0 * matmul_nt(v.psi(), &bi).unwrap().frobenius_norm();
        worst = worst.max(g.frobenius_norm() / scale.max(f64::MIN_POSITIVE));
    }
    let elapsed = t0.elapsed();
    verdict(
        worst <= STATIONARITY_TOL && elapsed < Duration::from_secs(60),
        format!(
            "{STATIONARITY_INSTANCES} instances x 2 blocks; worst relative gradient {worst:.2e} (limit {STATIONARITY_TOL:.0e}); {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. monotonicity

fn criterion_3() -> Verdict {
    let settings: [(usize, usize, f64, f64, u64); 6] = [
        (400, 10, 1e-5, 5.0, 0),
        (400, 10, 1.0, 2.0, 1),
        (600, 5, 10.0, 1.5, 2),
        (300, 3, 1e-2, 8.0, 3),
        (500, 10, 1e-5, 5.0, 4),
        (250, 20, 0.3, 3.0, 5),
    ];
    let (mut violations, mut checks, mut fits) = (0, 0, 0);
    for (n, c, lambda3, r_exp, seed) in settings {
        let ds = generate_synthetic(&SynthConfig {
            samples: n,
            clusters: c,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let hyper = Hyperparams {
            clusters: c,
            lambda3,
            r: r_exp,
            anchors: Some(200),
            seed,
            ..Hyperparams::default()
        };
        let result = fit(&ds, &hyper).unwrap();
        violations += result.diagnostics.violations();
        checks += result.diagnostics.checks;
        fits += 1;
    }
    verdict(
        violations == 0,
        format!("{fits} training runs, {violations} violations beyond 1e-9 slack in {checks} step checks"),
    )
}

// ---------------------------------------------------------------------------
// 4. Hamming kernels

fn criterion_4() -> Verdict {
    let mut r = rng(4);
    let pairs = 10_000;
    let (mut plain_bad, mut weighted_bad) = (0, 0);
    for _ in 0..pairs {
        let k = r.random_range(1..=300);
        let m = random_bits(k, 2, &mut r);
        let (a, b) = (m.column(0), m.column(1));
        let naive = (0..k).filter(|&row| a.sign(row) != b.sign(row)).count() as u32;
        plain_bad += usize::from(hamming(a, b).unwrap() != naive);

        let w: Vec<f64> = (0..k).map(|_| r.random_range(0.0..5.0)).collect();
        let mut dense = 0.0;
        for (row, wk) in w.iter().enumerate() {
            dense += 0.25 * wk * (f64::from(a.sign(row)) - f64::from(b.sign(row))).powi(2);
        }
        let weights = BitRowWeights::new(w).unwrap();
        weighted_bad += usize::from(weighted_hamming(a, b, &weights).unwrap() != dense);
    }
    verdict(
        plain_bad == 0 && weighted_bad == 0,
        format!("{pairs} random pairs (K up to 300): {plain_bad} plain and {weighted_bad} weighted mismatches (exact equality)"),
    )
}

// ---------------------------------------------------------------------------
// 5. synthetic clustering quality

const QUALITY_RESTARTS: usize = 10;
const MULTI_VS_SINGLE: f64 = 0.03;
const MULTI_VS_KMEANS: f64 = 0.02;

fn criterion_5() -> Verdict {
    let t0 = Instant::now();
    let ds = generate_synthetic(&SynthConfig {
        clusters: 10,
        samples: 5000,
        seed: 0,
        ..SynthConfig::default()
    })
    .unwrap();
    let truth = ds.labels().unwrap().to_vec();
    let hyper = Hyperparams {
        clusters: 10,
        seed: 0,
        ..Hyperparams::default()
    };
    let multi = evaluate_restarts(&ds, &hyper, QUALITY_RESTARTS).unwrap().mean.acc;
    let singles: Vec<f64> = (0..ds.num_views())
        .map(|v| {
            let single = ds.select_views(&[v]).unwrap();
            evaluate_restarts(&single, &hyper, QUALITY_RESTARTS).unwrap().mean.acc
        })
        .collect();
    let best_single = singles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let concat = ds.concatenated();
    let km: Vec<f64> = (0..QUALITY_RESTARTS)
        .map(|i| {
            let res = baselines::kmeans(&concat, 10, 100, restart_seed(hyper.seed, i)).unwrap();
            accuracy(res.assignments.labels(), &truth).unwrap()
        })
        .collect();
    let kmeans = report::mean(&km);
    let elapsed = t0.elapsed();
    verdict(
        multi - best_single >= MULTI_VS_SINGLE
            && multi - kmeans >= MULTI_VS_KMEANS
            && elapsed < Duration::from_secs(300),
        format!(
            "mean ACC multi {multi:.4}, single views {:?} (best {best_single:.4}, margin {:+.4}, need >= {MULTI_VS_SINGLE}), \
             concatenated kmeans {kmeans:.4} (margin {:+.4}, need >= {MULTI_VS_KMEANS}); {:.1}s (limit 300s)",
            singles.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>(),
            multi - best_single,
            multi - kmeans,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. scaling

const SCALING_SIZES: [usize; 3] = [2000, 4000, 8000];
const SCALING_RUNS: usize = 3;
const SCALING_MAX_RATIO: f64 = 1.5;

fn criterion_6() -> Verdict {
    let hyper = Hyperparams::default();
    let mut medians = Vec::new();
    for &n in &SCALING_SIZES {
        let ds = generate_synthetic(&SynthConfig {
            samples: n,
            seed: 6,
            ..SynthConfig::default()
        })
        .unwrap();
        let times: Vec<f64> = (0..SCALING_RUNS)
            .map(|rep| {
                let h = Hyperparams {
                    seed: restart_seed(6, rep),
                    ..hyper.clone()
                };
                let t0 = Instant::now();
                fit(&ds, &h).unwrap();
                t0.elapsed().as_secs_f64()
            })
            .collect();
        medians.push(report::median(&times));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    verdict(
        ratios.iter().all(|&r| r <= SCALING_MAX_RATIO),
        format!(
            "median fit seconds at N={SCALING_SIZES:?}: {:?}; ratio per doubling {:?} (limit {SCALING_MAX_RATIO})",
            medians.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. memory accounting

fn criterion_7() -> Verdict {
    let exact_codes = [1usize, 63, 64, 1000, 4999, 100_000]
        .iter()
        .all(|&n| PackedBitMatrix::new(128, n).memory_bytes() == 16 * n);

    let n = 1000;
    let dims = vec![1024, 1301, 1301];
    let d: usize = dims.iter().sum();
    let ds = generate_synthetic(&SynthConfig {
        samples: n,
        dims,
        seed: 7,
        ..SynthConfig::default()
    })
    .unwrap();
    let hyper = Hyperparams {
        anchors: Some(100),
        outer_iters: 2,
        ..Hyperparams::default()
    };
    let row = bench_row(&ds, &hyper, 1).unwrap();
    let m = row.memory;
    let want = d as f64 / 2.0;
    verdict(
        exact_codes && m.code_bytes == 16 * n && m.feature_bytes == 8 * d * n && m.data_reduction == want,
        format!(
            "B at K=128 = 16*N bytes: {exact_codes}; bench at N={n}, d={d}: code {} B, features {} B, reduction {:.1}x (d/2 = {want})",
            m.code_bytes, m.feature_bytes, m.data_reduction
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. metrics

fn pairwise_f_brute(pred: &[usize], truth: &[usize]) -> f64 {
    let (mut tp, mut pp, mut tt) = (0u64, 0u64, 0u64);
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            let (sp, st) = (pred[i] == pred[j], truth[i] == truth[j]);
            tp += u64::from(sp && st);
            pp += u64::from(sp);
            tt += u64::from(st);
        }
    }
    if pp == 0 || tt == 0 {
        return 0.0;
    }
    let (p, r) = (tp as f64 / pp as f64, tp as f64 / tt as f64);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn criterion_8() -> Verdict {
    let mut notes = Vec::new();
    let pred = [0, 0, 1, 1, 2, 2];
    let truth = [0, 1, 1, 1, 2, 2];

    // hand values: I = (1/6)ln3 + (1/3)ln2 + (1/3)ln3, H(pred) = ln3,
    // H(truth) = (1/6)ln6 + (1/2)ln2 + (1/3)ln3
    let i = 3f64.ln() / 6.0 + 2f64.ln() / 3.0 + 3f64.ln() / 3.0;
    let h_pred = 3f64.ln();
    let h_truth = 6f64.ln() / 6.0 + 2f64.ln() / 2.0 + 3f64.ln() / 3.0;
    let want_nmi = i / (h_pred * h_truth).sqrt();
    let worked = accuracy(&pred, &truth).unwrap() == 5.0 / 6.0
        && purity(&pred, &truth).unwrap() == 5.0 / 6.0
        && (nmi(&pred, &truth).unwrap() - want_nmi).abs() < 1e-12
        // pairs: 3 predicted, 4 true, 2 shared → P = 2/3, R = 1/2
        && (f_score(&pred, &truth).unwrap() - 4.0 / 7.0).abs() < 1e-15
        && f_score(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap() == 0.5;
    if !worked {
        notes.push("worked examples");
    }

    let mut r = rng(8);
    let mut brute_bad = 0;
    let mut perm_bad = 0;
    for case in 0..100 {
        let n = r.random_range(1..=60);
        let (cp, ct) = (r.random_range(1..=7), r.random_range(1..=7));
        let p: Vec<usize> = (0..n).map(|_| r.random_range(0..cp)).collect();
        let t: Vec<usize> = (0..n).map(|_| r.random_range(0..ct)).collect();
        brute_bad += usize::from(f_score(&p, &t).unwrap() != pairwise_f_brute(&p, &t));

        let mut sigma: Vec<usize> = (0..cp).map(|x| x * 3 + case % 5).collect();
        sigma.shuffle(&mut r);
        let mut tau: Vec<usize> = (0..ct).map(|x| 100 - x).collect();
        tau.shuffle(&mut r);
        let p2: Vec<usize> = p.iter().map(|&x| sigma[x]).collect();
        let t2: Vec<usize> = t.iter().map(|&x| tau[x]).collect();
        let same = accuracy(&p, &t).unwrap() == accuracy(&p2, &t2).unwrap()
            && purity(&p, &t).unwrap() == purity(&p2, &t2).unwrap()
            && f_score(&p, &t).unwrap() == f_score(&p2, &t2).unwrap()
            && (nmi(&p, &t).unwrap() - nmi(&p2, &t2).unwrap()).abs() < 1e-12;
        perm_bad += usize::from(!same);
    }
    verdict(
        notes.is_empty() && brute_bad == 0 && perm_bad == 0,
        format!(
            "worked examples ok: {worked}; pairwise-F brute force mismatches {brute_bad}/100; relabel-invariance failures {perm_bad}/100"
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. determinism and persistence

fn criterion_9() -> Verdict {
    let ds = generate_synthetic(&SynthConfig {
        samples: 800,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let hyper = Hyperparams {
        anchors: Some(300),
        seed: 9,
        ..Hyperparams::default()
    };
    let a = fit(&ds, &hyper).unwrap();
    let b = fit(&ds, &hyper).unwrap();
    let same_bytes = encode_model(&a.model) == encode_model(&b.model);
    let same_labels = a.assignments == b.assignments;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.hsic");
    save_model(&path, &a.model).unwrap();
    let loaded = load_model(&path).unwrap();
    let views: Vec<Option<&DenseMatrix>> = ds.views().iter().map(Some).collect();
    let same_predictions = predict(&loaded, &views).unwrap() == predict(&a.model, &views).unwrap();
    let file_stable = std::fs::read(&path).unwrap() == encode_model(&loaded);
    verdict(
        same_bytes && same_labels && same_predictions && file_stable,
        format!(
            "model bytes identical: {same_bytes}; labels identical: {same_labels}; \
             reload predictions identical: {same_predictions}; re-encoded file identical: {file_stable}"
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "step exactness", criterion_1),
        (2, "projection stationarity", criterion_2),
        (3, "monotonicity", criterion_3),
        (4, "hamming kernels", criterion_4),
        (5, "synthetic clustering quality", criterion_5),
        (6, "linear scaling", criterion_6),
        (7, "memory accounting", criterion_7),
        (8, "metrics oracles", criterion_8),
        (9, "determinism and persistence", criterion_9),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t0 = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "[{}] criterion {id} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} criterion(s) failed");
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
