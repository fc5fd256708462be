//! Multi-view clustering through learned binary codes.
//!
//! Features from several aligned views are lifted with an RBF anchor
//! embedding, projected onto a common K-bit code that mixes shared and
//! view-specific projections, and clustered in Hamming space against binary
//! centroids under an ℓ21-robust factorization loss. All variables are
//! updated by alternating minimization; see [`optimizer::fit`].

pub mod baselines;
pub mod bitcode;
mod error;
pub mod kernel;
pub mod metrics;
pub mod numeric;
pub mod optimizer;
pub mod rng;

pub use bitcode::{BitColumn, BitRowWeights, PackedBitMatrix};
pub use error::{Error, Result};
pub use kernel::{KernelMap, MultiViewDataset};
pub use numeric::DenseMatrix;
pub use optimizer::{fit, Assignments, FitResult, HsicModel, Hyperparams};
