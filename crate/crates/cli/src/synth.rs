//! Synthetic multi-view blobs.
//!
//! Samples are drawn around `c` Gaussian centers in a latent space. Every
//! view sees the latent points through its own random low-rank linear map
//! followed by independent Gaussian noise, so each view on its own loses
//! part of the cluster structure while the views together retain it.

use hamclust::{DenseMatrix, MultiViewDataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub clusters: usize,
    pub samples: usize,
    /// Feature dimension of each view; its length is the number of views.
    pub dims: Vec<usize>,
    /// Dimension of the latent space holding the blob centers.
    pub latent_dim: usize,
    /// Rank of each view's latent-to-feature map; `None` means full rank.
    pub view_rank: Option<usize>,
    /// Standard deviation of the blob centers around the origin, in units
    /// of the within-blob spread.
    pub separation: f64,
    /// Standard deviation of the per-view feature noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clusters: 10,
            samples: 1000,
            dims: vec![20, 20, 20],
            latent_dim: 12,
            view_rank: Some(6),
            separation: 3.0,
            noise: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &'static str, reason: &str| {
            Err(CliError::Config {
                field,
                reason: reason.to_string(),
            })
        };
        if self.clusters == 0 {
            return fail("clusters", "must be at least 1");
        }
        if self.samples < self.clusters {
            return fail("samples", "must be at least the number of clusters");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return fail("dims", "every view needs at least one feature");
        }
        if self.latent_dim == 0 {
            return fail("latent_dim", "must be at least 1");
        }
        if matches!(self.view_rank, Some(r) if r == 0 || r > self.latent_dim) {
            return fail("view_rank", "must lie in 1..=latent_dim");
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return fail("separation", "must be finite and non-negative");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return fail("noise", "must be finite and non-negative");
        }
        Ok(())
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws a dataset with ground-truth labels attached. Cluster sizes differ
/// by at most one and sample order is shuffled.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<MultiViewDataset, CliError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (c, n, p) = (cfg.clusters, cfg.samples, cfg.latent_dim);

    let centers = DenseMatrix::from_fn(p, c, |_, _| cfg.separation * gaussian(&mut rng));
    let mut labels: Vec<usize> = (0..n).map(|i| i * c / n).collect();
    labels.shuffle(&mut rng);
    let latent = DenseMatrix::from_fn(p, n, |r, i| centers.get(r, labels[i]) + gaussian(&mut rng));

    let rank = cfg.view_rank.unwrap_or(p);
    let mut views = Vec::with_capacity(cfg.dims.len());
    for &d in &cfg.dims {
        // rank-limited map: d × rank times rank × p, scaled to unit gain
        let outer = DenseMatrix::from_fn(d, rank, |_, _| gaussian(&mut rng) / (rank as f64).sqrt());
        let inner = DenseMatrix::from_fn(rank, p, |_, _| gaussian(&mut rng) / (p as f64).sqrt());
        let map = hamclust::numeric::matmul(&outer, &inner).map_err(hamclust::Error::from)?;
        let mut x = hamclust::numeric::matmul(&map, &latent).map_err(hamclust::Error::from)?;
        for v in x.as_mut_slice() {
            *v += cfg.noise * gaussian(&mut rng);
        }
        views.push(x);
    }
    Ok(MultiViewDataset::new(views, Some(labels))?)
}
