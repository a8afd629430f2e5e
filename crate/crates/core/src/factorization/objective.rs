use super::{model_mass, prepare, Facet, MetaFacModel};
use crate::corpus::RelationSet;
use crate::sparse::SparseMatrix;

/// Generalized KL divergence `Σ x ln(x/x̂) − x + x̂` between two dense
/// matrices, with `0 · ln 0 = 0`. Returns `+∞` when `x̂ = 0 < x`.
pub fn generalized_kl_dense(x: &[Vec<f64>], xhat: &[Vec<f64>]) -> f64 {
    let mut d = 0.0;
    for (xr, hr) in x.iter().zip(xhat) {
        for (&a, &b) in xr.iter().zip(hr) {
            if a > 0.0 {
                if b <= 0.0 {
                    return f64::INFINITY;
                }
                d += a * (a / b).ln();
            }
            d += b - a;
        }
    }
    d
}

/// Generalized KL divergence of one sparse relation against the model, using
/// the closed-form model mass for the cells where the data is zero.
pub fn relation_divergence(
    data: &SparseMatrix,
    model: &MetaFacModel,
    row_facet: Facet,
    col_facet: Facet,
) -> f64 {
    let mut log_term = 0.0;
    for (i, j, x) in data.iter() {
        let xhat = model.reconstruct(row_facet, i, col_facet, j);
        if xhat <= 0.0 {
            return f64::INFINITY;
        }
        log_term += x * (x / xhat).ln();
    }
    let mass = model_mass(&model.core, model.factor(row_facet), model.factor(col_facet));
    log_term - data.total() + mass
}

/// Weighted objective over the three relations, each rescaled to unit mass
/// exactly as during fitting.
pub fn objective_value(relations: &RelationSet, model: &MetaFacModel) -> f64 {
    prepare(relations, &model.weights)
        .iter()
        .filter(|r| r.weight > 0.0)
        .map(|r| r.weight * relation_divergence(&r.data, model, r.row_facet, r.col_facet))
        .sum()
}
