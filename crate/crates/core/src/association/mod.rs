//! SNP-trait association scores and their permutation calibration.

mod bayes_factor;
mod fdr;
mod permutation;

pub use bayes_factor::{univariate_bf, univariate_bf_matrix, DEFAULT_PRIOR_EFFECT_SD};
pub use fdr::{fdr_threshold, FdrThreshold};
pub use permutation::{
    assemble_scores, baseline_permutation_fdr, fit_permuted, permutation_order, permute_labels, permute_rows,
    run_permutation_fdr, PermutationFit, PermutationRun, DEFAULT_PERMUTATIONS,
};

use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::model::VariationalState;

/// Signed `E[Z] E[A]` (Q x P) together with its entrywise magnitude, which is
/// what significance thresholds are applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct Vmap {
    pub signed: Matrix,
    pub magnitude: Matrix,
}

pub fn vmap(state: &VariationalState) -> Vmap {
    let (q, k, p) = state.dims();
    let mut signed = Matrix::zeros(q, p);
    for qi in 0..q {
        let out = signed.row_mut(qi);
        for ki in 0..k {
            let e = state.eta[(qi, ki)];
            if e == 0.0 {
                continue;
            }
            for (o, &f) in out.iter_mut().zip(state.phi.row(ki)) {
                *o += e * f;
            }
        }
    }
    let magnitude = signed.map(libm::fabs);
    Vmap { signed, magnitude }
}

/// Real-data scores, the pooled permutation null and the resulting threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationScores {
    pub vmap: Vmap,
    pub threshold: Option<f64>,
    /// Estimated FDR at `threshold`.
    pub estimated_fdr: Option<f64>,
    pub fdr_target: f64,
    pub n_permutations: usize,
    pub null_scores: Vec<f64>,
}

impl AssociationScores {
    /// `(q, p)` pairs with `|vmap| >= threshold`, row-major order.
    pub fn discoveries(&self) -> Vec<(usize, usize)> {
        significant_pairs(&self.vmap.magnitude, self.threshold)
    }
}

pub fn significant_pairs(scores: &Matrix, threshold: Option<f64>) -> Vec<(usize, usize)> {
    let Some(t) = threshold else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for q in 0..scores.rows() {
        for (p, &s) in scores.row(q).iter().enumerate() {
            if s >= t {
                out.push((q, p));
            }
        }
    }
    out
}
