use crate::error::{Error, Result};
use crate::kernel::DEFAULT_ANCHORS;

/// Settings of the joint objective and its alternating solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Code length in bits.
    pub code_bits: usize,
    /// Fraction of bits driven by the shared projection.
    pub shared_ratio: f64,
    /// Ridge weight on the projections.
    pub lambda1: f64,
    /// Entropy-regularizer weight divided by the sample count.
    pub lambda2_over_n: f64,
    /// Weight of the ℓ21 clustering term.
    pub lambda3: f64,
    /// View-weight exponent, `> 1`.
    pub r: f64,
    /// Centroid balance penalty; `None` resolves to `1e-3 · N / c`.
    pub nu: Option<f64>,
    /// Outer iterations.
    pub outer_iters: usize,
    /// Inner centroid/assignment rounds per outer iteration.
    pub inner_iters: usize,
    pub clusters: usize,
    /// Anchors per view; `None` resolves to `min(1000, N)`.
    pub anchors: Option<usize>,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            code_bits: 128,
            shared_ratio: 0.2,
            lambda1: 1e-3,
            lambda2_over_n: 1e-3,
            lambda3: 1e-5,
            r: 5.0,
            nu: None,
            outer_iters: 10,
            inner_iters: 10,
            clusters: 10,
            anchors: None,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn shared_bits(&self) -> usize {
        (self.shared_ratio * self.code_bits as f64).round() as usize
    }

    pub fn individual_bits(&self) -> usize {
        self.code_bits.saturating_sub(self.shared_bits())
    }

    pub fn resolved_nu(&self, n: usize) -> f64 {
        self.nu.unwrap_or(1e-3 * n as f64 / self.clusters.max(1) as f64)
    }

    pub fn resolved_anchors(&self, n: usize) -> usize {
        self.anchors.unwrap_or(DEFAULT_ANCHORS.min(n))
    }

    /// Checks every field against its documented range; the error names the
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        fn finite_non_negative(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and >= 0, got {v}")))
            }
        }
        if self.code_bits < 2 {
            return Err(Error::config("code_bits", "must be at least 2"));
        }
        if !(self.shared_ratio > 0.0 && self.shared_ratio < 1.0) {
            return Err(Error::config(
                "shared_ratio",
                format!("must lie in (0, 1), got {}", self.shared_ratio),
            ));
        }
        if self.shared_bits() < 1 || self.individual_bits() < 1 {
            return Err(Error::config(
                "shared_ratio",
                format!(
                    "splits {} bits into {} shared / {} individual; both must be >= 1",
                    self.code_bits,
                    self.shared_bits(),
                    self.individual_bits()
                ),
            ));
        }
        finite_non_negative("lambda1", self.lambda1)?;
        finite_non_negative("lambda2_over_n", self.lambda2_over_n)?;
        finite_non_negative("lambda3", self.lambda3)?;
        if !(self.r.is_finite() && self.r > 1.0) {
            return Err(Error::config("r", format!("must be > 1, got {}", self.r)));
        }
        if let Some(nu) = self.nu {
            finite_non_negative("nu", nu)?;
        }
        if self.clusters < 2 {
            return Err(Error::config("clusters", "must be at least 2"));
        }
        if self.inner_iters == 0 {
            return Err(Error::config("inner_iters", "must be at least 1"));
        }
        if self.anchors == Some(0) {
            return Err(Error::config("anchors", "must be at least 1"));
        }
        Ok(())
    }
}
