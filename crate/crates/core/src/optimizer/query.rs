//! Encoding and assignment of samples that were not part of training.

use super::model::{Assignments, HsicModel};
use super::steps::view_factors;
use crate::bitcode::{nearest_hamming_unchecked, BitColumn, PackedBitMatrix};
use crate::error::{Error, Result};
use crate::numeric::{matmul_tn, DenseMatrix};

/// Encodes a batch of queries: `sgn(Σ_v (α^v)^r (P^v)ᵀ ψ_v(x̂^v))`.
///
/// `views[v]` holds the `d_v × n` raw features of view `v`, or `None` when
/// that view is missing; the weights of the present views are renormalized
/// to sum to one before the exponent is applied.
pub fn encode_queries(model: &HsicModel, views: &[Option<&DenseMatrix>]) -> Result<PackedBitMatrix> {
    if views.len() != model.num_views() {
        return Err(Error::Data(format!(
            "model has {} views, query supplies {}",
            model.num_views(),
            views.len()
        )));
    }
    let present: Vec<usize> = (0..views.len()).filter(|&v| views[v].is_some()).collect();
    let Some(&first) = present.first() else {
        return Err(Error::Data("query supplies no views".into()));
    };
    let n = views[first].map(DenseMatrix::cols).unwrap_or(0);
    let mass: f64 = present.iter().map(|&v| model.alpha[v]).sum();
    let alpha: Vec<f64> = present.iter().map(|&v| model.alpha[v] / mass).collect();
    let weights = view_factors(&alpha, model.hyper.r);

    let mut sum = DenseMatrix::zeros(model.code_bits(), n);
    for (&v, w) in present.iter().zip(weights) {
        let x = views[v].expect("present");
        if x.cols() != n {
            return Err(Error::Data(format!("view {v} has {} queries, expected {n}", x.cols())));
        }
        let psi = model.kernel_maps[v].embed(x)?;
        let top = matmul_tn(&model.p_shared, &psi)?;
        let bottom = matmul_tn(&model.p_individual[v], &psi)?;
        sum.add_scaled(w, &DenseMatrix::vstack(&top, &bottom)?)?;
    }
    Ok(PackedBitMatrix::from_signs_of(&sum))
}

/// Encodes one query given as per-view feature vectors.
pub fn encode_query(model: &HsicModel, views: &[Option<&[f64]>]) -> Result<PackedBitMatrix> {
    let columns: Vec<Option<DenseMatrix>> = views
        .iter()
        .map(|x| x.map(|x| DenseMatrix::from_vec(x.len(), 1, x.to_vec())).transpose())
        .collect::<std::result::Result<_, _>>()?;
    let refs: Vec<Option<&DenseMatrix>> = columns.iter().map(Option::as_ref).collect();
    encode_queries(model, &refs)
}

/// Plain Hamming nearest centroid, ties to the lowest index.
pub fn assign_query(model: &HsicModel, code: BitColumn<'_>) -> Result<usize> {
    Ok(crate::bitcode::nearest_centroid_hamming(code, &model.centroids)?)
}

pub fn assign_queries(model: &HsicModel, codes: &PackedBitMatrix) -> Result<Assignments> {
    if codes.rows() != model.code_bits() {
        return Err(Error::Data(format!(
            "codes have {} bits, model uses {}",
            codes.rows(),
            model.code_bits()
        )));
    }
    let labels = codes
        .columns()
        .map(|c| nearest_hamming_unchecked(c.words(), &model.centroids).0)
        .collect();
    Assignments::new(labels, model.clusters())
}

/// Encodes and assigns a batch in one call.
pub fn predict(model: &HsicModel, views: &[Option<&DenseMatrix>]) -> Result<Assignments> {
    assign_queries(model, &encode_queries(model, views)?)
}
