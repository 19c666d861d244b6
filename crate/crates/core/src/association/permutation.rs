use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{fdr_threshold, univariate_bf_matrix, vmap, AssociationScores, FdrThreshold, Vmap};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Dataset, Hyperparameters, VariationalState};
use crate::rng::{child, Rng, Stream};
use crate::vb::{fit, fit_with_rng, FitReport};

pub const DEFAULT_PERMUTATIONS: usize = 10;

/// Uniformly random permutation of `0..n`.
pub fn permutation_order(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Reorder trait rows so that row `i` takes old row `order[i]`; genotypes
/// and sample labels stay in place.
pub fn permute_rows(data: &Dataset, order: &[usize]) -> Result<Dataset> {
    let n = data.n_samples();
    let mut seen = alloc::vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || core::mem::replace(&mut seen[i], true)) {
        return Err(Error::Argument {
            name: "order",
            reason: alloc::format!("not a permutation of 0..{n}"),
        });
    }
    let traits = Matrix::from_fn(n, data.n_traits(), |r, c| data.traits[(order[r], c)]);
    Ok(Dataset { traits, ..data.clone() })
}

/// Shuffle sample labels of the trait matrix with the `(seed, index)`
/// permutation stream.
pub fn permute_labels(data: &Dataset, seed: u64, index: u64) -> Result<Dataset> {
    if data.n_samples() < 2 {
        return Err(Error::Argument {
            name: "data",
            reason: alloc::string::String::from("need at least two samples to permute"),
        });
    }
    let order = permutation_order(data.n_samples(), &mut child(seed, Stream::Permutation, index));
    permute_rows(data, &order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationFit {
    pub index: usize,
    /// Row-major `|VMAP|` of the permuted fit.
    pub scores: Vec<f64>,
    pub report: FitReport,
}

/// Refit on the `index`-th permuted dataset. Hyperparameters are reused
/// unchanged; the starting point comes from its own stream.
pub fn fit_permuted(data: &Dataset, hp: &Hyperparameters, index: usize) -> Result<PermutationFit> {
    let permuted = permute_labels(data, hp.seed, index as u64)?;
    let mut rng = child(hp.seed, Stream::PermutationInit, index as u64);
    let (state, report) = fit_with_rng(&permuted, hp, &mut rng)?;
    if !report.converged {
        log::warn!(
            "permutation {index} did not converge in {} iterations; keeping its scores",
            report.iterations
        );
    }
    Ok(PermutationFit {
        index,
        scores: vmap(&state).magnitude.into_vec(),
        report,
    })
}

/// Pool permuted scores (in index order) as the null and threshold the real
/// scores against it.
pub fn assemble_scores(real: Vmap, permutations: &[PermutationFit], fdr_target: f64) -> AssociationScores {
    let null_scores: Vec<f64> = permutations.iter().flat_map(|f| f.scores.iter().copied()).collect();
    let real_scores = real.magnitude.as_slice();
    let cut = fdr_threshold(
        real_scores,
        &null_scores,
        fdr_target,
        real_scores.len(),
        null_scores.len(),
    );
    AssociationScores {
        vmap: real,
        threshold: cut.map(|c| c.threshold),
        estimated_fdr: cut.map(|c| c.estimated_fdr),
        fdr_target,
        n_permutations: permutations.len(),
        null_scores,
    }
}

#[derive(Debug, Clone)]
pub struct PermutationRun {
    pub scores: AssociationScores,
    pub state: VariationalState,
    pub report: FitReport,
    pub null_reports: Vec<FitReport>,
}

/// Fit the real data and `n_permutations` label-shuffled copies, then
/// threshold the real scores at `fdr_target`.
pub fn run_permutation_fdr(
    data: &Dataset,
    hp: &Hyperparameters,
    fdr_target: f64,
    n_permutations: usize,
) -> Result<PermutationRun> {
    check_fdr_args(fdr_target, n_permutations)?;
    let (state, report) = fit(data, hp)?;
    let permutations = (0..n_permutations)
        .map(|i| fit_permuted(data, hp, i))
        .collect::<Result<Vec<_>>>()?;
    let null_reports = permutations.iter().map(|f| f.report.clone()).collect();
    let scores = assemble_scores(vmap(&state), &permutations, fdr_target);
    Ok(PermutationRun {
        scores,
        state,
        report,
        null_reports,
    })
}

pub(crate) fn check_fdr_args(fdr_target: f64, n_permutations: usize) -> Result<()> {
    if n_permutations == 0 {
        return Err(Error::Argument {
            name: "n_permutations",
            reason: alloc::string::String::from("must be >= 1"),
        });
    }
    if !(fdr_target > 0.0 && fdr_target < 1.0) {
        return Err(Error::Argument {
            name: "fdr_target",
            reason: alloc::format!("must lie in (0, 1), got {fdr_target}"),
        });
    }
    Ok(())
}

/// Univariate Bayes factors on the real data, thresholded against the same
/// permuted datasets the multi-SNP fit uses.
pub fn baseline_permutation_fdr(
    data: &Dataset,
    hp: &Hyperparameters,
    fdr_target: f64,
    n_permutations: usize,
    prior_effect_sd: f64,
) -> Result<(Matrix, Option<FdrThreshold>)> {
    check_fdr_args(fdr_target, n_permutations)?;
    let real = univariate_bf_matrix(data, prior_effect_sd, hp.sigma2);
    let mut null = Vec::with_capacity(real.as_slice().len() * n_permutations);
    for i in 0..n_permutations {
        let permuted = permute_labels(data, hp.seed, i as u64)?;
        null.extend_from_slice(univariate_bf_matrix(&permuted, prior_effect_sd, hp.sigma2).as_slice());
    }
    let cut = fdr_threshold(real.as_slice(), &null, fdr_target, real.as_slice().len(), null.len());
    Ok((real, cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Genotypes;

    fn data(n: usize) -> Dataset {
        let g = Genotypes::from_fn(n, 2, |r, c| ((r + c) % 3) as u8).unwrap();
        Dataset::unlabeled(g, Matrix::from_fn(n, 3, |r, c| (r * 3 + c) as f64)).unwrap()
    }

    #[test]
    fn identity_permutation_is_a_no_op() {
        let d = data(6);
        let order: Vec<usize> = (0..6).collect();
        assert_eq!(permute_rows(&d, &order).unwrap(), d);
    }

    #[test]
    fn permutation_keeps_genotypes_and_column_moments() {
        let d = data(10);
        let p = permute_labels(&d, 3, 0).unwrap();
        assert_eq!(p.genotypes, d.genotypes);
        assert_eq!(p.sample_ids, d.sample_ids);
        for (a, b) in p.traits.column_means().iter().zip(d.traits.column_means()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut sorted_a = p.traits.column(1);
        let mut sorted_b = d.traits.column(1);
        sorted_a.sort_by(f64::total_cmp);
        sorted_b.sort_by(f64::total_cmp);
        assert_eq!(sorted_a, sorted_b);
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let d = data(3);
        assert!(permute_rows(&d, &[0, 0, 1]).is_err());
        assert!(permute_rows(&d, &[0, 1]).is_err());
        assert!(permute_labels(&data(1), 0, 0).is_err());
    }
}
