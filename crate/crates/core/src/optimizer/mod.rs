//! Joint learning of common binary codes and binary cluster structure.
//!
//! The objective couples, for every view `v` with weight `(α^v)^r`, the
//! code-fitting loss `‖B − (P^v)ᵀψ(X^v)‖²`, a ridge `λ₁‖P^v‖²` and an
//! entropy reward `−λ₂ g(P^v)`, with an ℓ21 factorization loss
//! `λ₃‖B − QF‖₂₁` over binary centroids `Q` and one-hot assignments `F`.
//! Each projection `P^v = [P_S, P_I^v]` splits into a shared block and a
//! view-specific block.

mod fit;
mod model;
mod params;
mod query;
pub mod steps;

pub use fit::{
    embed_views, evaluate_objective, fit, Diagnostics, FitResult, StepTimings, CONVERGENCE_TOL, MONOTONE_SLACK,
};
pub use model::{Assignments, HsicModel, TrainState, ViewEmbedding};
pub use params::Hyperparams;
pub use query::{assign_queries, assign_query, encode_queries, encode_query, predict};
