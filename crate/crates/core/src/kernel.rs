//! RBF anchor embedding of raw view features.
//!
//! Each view is zero-centered per feature, `l` anchor columns are drawn
//! uniformly without replacement, and every sample is mapped to
//! `exp(-‖x − a_j‖² / γ)` for each anchor. The embedding rows are then
//! centered with the fitting-set mean. All centers, anchors and γ are kept
//! so that unseen samples go through exactly the same map.

use crate::error::{Error, Result};
use crate::numeric::{matmul_tn, DenseMatrix};
use rand::seq::index::sample;
use rand::Rng;

/// Number of (sample, anchor) pairs above which γ is estimated from a
/// random subsample instead of the full enumeration.
pub const GAMMA_MAX_PAIRS: usize = 20_000;

/// Default embedding dimension per view, capped at the sample count.
pub const DEFAULT_ANCHORS: usize = 1000;

/// Aligned multi-view features: view `v` is a `d_v × N` matrix whose column
/// `i` describes sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DenseMatrix>,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<DenseMatrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::Data("a dataset needs at least one view".into()));
        };
        let n = first.cols();
        for (v, view) in views.iter().enumerate() {
            if view.cols() != n {
                return Err(Error::Data(format!(
                    "view {v} has {} samples, view 0 has {n}",
                    view.cols()
                )));
            }
            if view.rows() == 0 {
                return Err(Error::Data(format!("view {v} has no features")));
            }
            if !view.is_finite() {
                return Err(Error::Data(format!("view {v} contains non-finite values")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Data(format!("{} labels for {n} samples", l.len())));
            }
        }
        Ok(Self { views, labels })
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.views[0].cols()
    }

    pub fn views(&self) -> &[DenseMatrix] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &DenseMatrix {
        &self.views[v]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(DenseMatrix::rows).collect()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Dataset restricted to the listed views, in the given order.
    pub fn select_views(&self, which: &[usize]) -> Result<Self> {
        let views = which
            .iter()
            .map(|&v| {
                self.views
                    .get(v)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("no view {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(views, self.labels.clone())
    }

    /// All views stacked into one `(Σ d_v) × N` matrix.
    pub fn concatenated(&self) -> DenseMatrix {
        let mut out = self.views[0].clone();
        for v in &self.views[1..] {
            out = DenseMatrix::vstack(&out, v).expect("views share N");
        }
        out
    }
}

/// Uniformly samples `l` distinct sample indices out of `n`.
pub fn select_anchors(n: usize, l: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if l == 0 {
        return Err(Error::config("anchors", "must be at least 1"));
    }
    if l > n {
        return Err(Error::config(
            "anchors",
            format!("{l} anchors requested from {n} samples"),
        ));
    }
    Ok(sample(rng, n, l).into_vec())
}

fn column_sq_norms(x: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (acc, v) in out.iter_mut().zip(x.row(r)) {
            *acc += v * v;
        }
    }
    out
}

fn sq_dist(x: &DenseMatrix, i: usize, anchors: &DenseMatrix, j: usize) -> f64 {
    (0..x.rows())
        .map(|r| {
            let d = x.get(r, i) - anchors.get(r, j);
            d * d
        })
        .sum()
}

/// Mean squared sample-anchor distance, exact when there are at most
/// [`GAMMA_MAX_PAIRS`] pairs and estimated from that many random pairs
/// otherwise. Falls back to 1 when every distance is zero.
pub fn fit_gamma(x: &DenseMatrix, anchors: &DenseMatrix, rng: &mut impl Rng) -> Result<f64> {
    Ok(mean_sq_distance(x, anchors, rng)?.unwrap_or(1.0))
}

fn mean_sq_distance(x: &DenseMatrix, anchors: &DenseMatrix, rng: &mut impl Rng) -> Result<Option<f64>> {
    let (n, l) = (x.cols(), anchors.cols());
    if n == 0 || l == 0 {
        return Err(Error::Data("gamma needs at least one sample and one anchor".into()));
    }
    if x.rows() != anchors.rows() {
        return Err(Error::Data(format!(
            "anchors have {} features, data has {}",
            anchors.rows(),
            x.rows()
        )));
    }
    let total = n * l;
    let mean = if total <= GAMMA_MAX_PAIRS {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..l {
                s += sq_dist(x, i, anchors, j);
            }
        }
        s / total as f64
    } else {
        let mut s = 0.0;
        for _ in 0..GAMMA_MAX_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..l);
            s += sq_dist(x, i, anchors, j);
        }
        s / GAMMA_MAX_PAIRS as f64
    };
    Ok((mean > 0.0 && mean.is_finite()).then_some(mean))
}

/// Fitted per-view embedding ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMap {
    feature_center: Vec<f64>,
    anchors: DenseMatrix,
    anchor_sq_norms: Vec<f64>,
    gamma: f64,
    embed_center: Vec<f64>,
}

/// Output of [`KernelMap::fit`].
#[derive(Debug, Clone)]
pub struct KernelFit {
    pub map: KernelMap,
    /// Centered `l × N` embedding of the fitting set.
    pub embedding: DenseMatrix,
    /// All distances were zero and γ fell back to 1.
    pub degenerate: bool,
}

impl KernelMap {
    /// Fits the map on `x` (`d × N`) with `l` anchors and returns it along
    /// with the centered training embedding.
    pub fn fit(x: &DenseMatrix, l: usize, rng: &mut impl Rng) -> Result<KernelFit> {
        if !x.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        let (d, n) = x.shape();
        let feature_center: Vec<f64> = (0..d).map(|r| x.row(r).iter().sum::<f64>() / n.max(1) as f64).collect();
        let centered = center_rows(x, &feature_center);
        let idx = select_anchors(n, l, rng)?;
        let anchors = DenseMatrix::from_fn(d, l, |r, j| centered.get(r, idx[j]));
        let mean = mean_sq_distance(&centered, &anchors, rng)?;
        let degenerate = mean.is_none();
        let gamma = mean.unwrap_or(1.0);
        let anchor_sq_norms = column_sq_norms(&anchors);
        let mut map = Self {
            feature_center,
            anchors,
            anchor_sq_norms,
            gamma,
            embed_center: vec![0.0; l],
        };
        let mut embedding = map.embed_centered_features(&centered)?;
        map.embed_center = (0..l)
            .map(|j| embedding.row(j).iter().sum::<f64>() / n as f64)
            .collect();
        subtract_row_means(&mut embedding, &map.embed_center);
        Ok(KernelFit {
            map,
            embedding,
            degenerate,
        })
    }

    /// Rebuilds a map from stored parts (e.g. a model file).
    pub fn from_parts(
        feature_center: Vec<f64>,
        anchors: DenseMatrix,
        gamma: f64,
        embed_center: Vec<f64>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Data(format!("kernel width {gamma} must be positive")));
        }
        if anchors.cols() == 0 || anchors.rows() != feature_center.len() {
            return Err(Error::Data("anchor shape does not match feature center".into()));
        }
        if embed_center.len() != anchors.cols() {
            return Err(Error::Data("embedding center does not match anchor count".into()));
        }
        let anchor_sq_norms = column_sq_norms(&anchors);
        Ok(Self {
            feature_center,
            anchors,
            anchor_sq_norms,
            gamma,
            embed_center,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchors.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.rows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Anchors as columns, in centered feature coordinates.
    pub fn anchors(&self) -> &DenseMatrix {
        &self.anchors
    }

    pub fn feature_center(&self) -> &[f64] {
        &self.feature_center
    }

    pub fn embed_center(&self) -> &[f64] {
        &self.embed_center
    }

    /// Centered `l × N` embedding of raw features `x` (`d × N`).
    pub fn embed(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut e = self.embed_uncentered(x)?;
        subtract_row_means(&mut e, &self.embed_center);
        Ok(e)
    }

    /// RBF responses before the embedding center is removed; entries lie in
    /// (0, 1].
    pub fn embed_uncentered(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.input_dim() {
            return Err(Error::Data(format!(
                "expected {} features, got {}",
                self.input_dim(),
                x.rows()
            )));
        }
        if !x.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        self.embed_centered_features(&center_rows(x, &self.feature_center))
    }

    fn embed_centered_features(&self, centered: &DenseMatrix) -> Result<DenseMatrix> {
        let cross = matmul_tn(&self.anchors, centered)?;
        let x_norms = column_sq_norms(centered);
        let mut out = cross;
        let inv_gamma = 1.0 / self.gamma;
        for j in 0..out.rows() {
            let a = self.anchor_sq_norms[j];
            for (v, xn) in out.row_mut(j).iter_mut().zip(&x_norms) {
                let dist = (a + xn - 2.0 * *v).max(0.0);
                *v = (-dist * inv_gamma).exp();
            }
        }
        Ok(out)
    }
}

fn center_rows(x: &DenseMatrix, center: &[f64]) -> DenseMatrix {
    let mut out = x.clone();
    subtract_row_means(&mut out, center);
    out
}

fn subtract_row_means(x: &mut DenseMatrix, center: &[f64]) {
    for (r, c) in center.iter().enumerate() {
        x.row_mut(r).iter_mut().for_each(|v| *v -= c);
    }
}
