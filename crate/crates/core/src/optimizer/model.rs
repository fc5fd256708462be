use super::params::Hyperparams;
use crate::bitcode::{BitRowWeights, PackedBitMatrix};
use crate::error::{Error, Result};
use crate::kernel::KernelMap;
use crate::numeric::{matmul_nt, Cholesky, DenseMatrix};

/// One cluster label per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignments {
    labels: Vec<usize>,
    clusters: usize,
}

impl Assignments {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l >= clusters) {
            return Err(Error::Data(format!("label {bad} out of range for {clusters} clusters")));
        }
        Ok(Self { labels, clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.clusters];
        self.labels.iter().for_each(|&l| out[l] += 1);
        out
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub(crate) fn set(&mut self, i: usize, label: usize) {
        debug_assert!(label < self.clusters);
        self.labels[i] = label;
    }
}

/// Centered kernel embedding of one view with its Gram matrix `ψ ψᵀ`.
#[derive(Debug, Clone)]
pub struct ViewEmbedding {
    psi: DenseMatrix,
    gram: DenseMatrix,
}

impl ViewEmbedding {
    /// `psi` is `l × N`.
    pub fn new(psi: DenseMatrix) -> Result<Self> {
        let gram = matmul_nt(&psi, &psi)?;
        Ok(Self { psi, gram })
    }

    pub fn psi(&self) -> &DenseMatrix {
        &self.psi
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.psi.rows()
    }

    pub fn num_samples(&self) -> usize {
        self.psi.cols()
    }

    /// `(1 − λ₂/N) ψψᵀ + λ₁ I`, the system matrix of the individual
    /// projection step.
    pub fn regularized_gram(&self, hyper: &Hyperparams) -> DenseMatrix {
        let mut m = self.gram.clone();
        m.scale(1.0 - hyper.lambda2_over_n);
        m.add_diagonal(hyper.lambda1);
        m
    }

    /// Factorization of [`Self::regularized_gram`]; it does not depend on
    /// any other variable, so it is built once per fit.
    pub fn individual_system(&self, hyper: &Hyperparams) -> Result<Cholesky> {
        Ok(Cholesky::factor(&self.regularized_gram(hyper), "p_individual")?)
    }
}

/// Learned parameters needed to encode and assign new samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HsicModel {
    /// `l × K_S`
    pub p_shared: DenseMatrix,
    /// One `l × K_I` matrix per view.
    pub p_individual: Vec<DenseMatrix>,
    /// View weights on the simplex.
    pub alpha: Vec<f64>,
    /// `K × c` binary centroids.
    pub centroids: PackedBitMatrix,
    pub kernel_maps: Vec<KernelMap>,
    /// Hyperparameters with `nu` and `anchors` resolved.
    pub hyper: Hyperparams,
}

impl HsicModel {
    pub fn num_views(&self) -> usize {
        self.kernel_maps.len()
    }

    pub fn code_bits(&self) -> usize {
        self.hyper.code_bits
    }

    pub fn clusters(&self) -> usize {
        self.centroids.cols()
    }

    /// Checks shapes and the simplex constraint on `alpha`.
    pub fn validate(&self) -> Result<()> {
        let m = self.kernel_maps.len();
        if m == 0 || self.p_individual.len() != m || self.alpha.len() != m {
            return Err(Error::Data("model view counts disagree".into()));
        }
        let (ks, ki) = (self.hyper.shared_bits(), self.hyper.individual_bits());
        let l = self.p_shared.rows();
        if self.p_shared.cols() != ks {
            return Err(Error::Data("shared projection width mismatch".into()));
        }
        for (v, (p, map)) in self.p_individual.iter().zip(&self.kernel_maps).enumerate() {
            if p.shape() != (l, ki) || map.dim() != l {
                return Err(Error::Data(format!("projection shape mismatch in view {v}")));
            }
        }
        if self.centroids.rows() != ks + ki {
            return Err(Error::Data("centroid code length mismatch".into()));
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.alpha.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return Err(Error::Data("view weights must be positive and sum to 1".into()));
        }
        Ok(())
    }

    /// Bytes held by the projection matrices.
    pub fn projection_bytes(&self) -> usize {
        let count =
            self.p_shared.as_slice().len() + self.p_individual.iter().map(|p| p.as_slice().len()).sum::<usize>();
        count * std::mem::size_of::<f64>()
    }
}

/// Training-only state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    /// `K × N` common codes, shared rows first.
    pub codes: PackedBitMatrix,
    pub assignments: Assignments,
    /// ℓ21 reweighting, one entry per bit.
    pub row_weights: BitRowWeights,
    /// Current proximal step scale of the centroid update.
    pub eta: f64,
    pub objective_trace: Vec<f64>,
}
