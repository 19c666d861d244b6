//! Multi-threaded permutation FDR.

use berrri_core::association::{assemble_scores, fit_permuted, vmap, PermutationFit, PermutationRun};
use berrri_core::vb::fit;
use berrri_core::{Dataset, Hyperparameters, Result};
use rayon::prelude::*;

/// Same result as the serial core routine: each permutation owns its random
/// streams and results are merged in permutation-index order, so the output
/// does not depend on the thread count.
pub fn permutation_fdr(
    data: &Dataset,
    hp: &Hyperparameters,
    fdr_target: f64,
    n_permutations: usize,
) -> Result<PermutationRun> {
    if n_permutations == 0 || !(fdr_target > 0.0 && fdr_target < 1.0) {
        // Let the core routine produce the argument error.
        return berrri_core::association::run_permutation_fdr(data, hp, fdr_target, n_permutations);
    }
    let (real, permutations) = rayon::join(
        || fit(data, hp),
        || {
            (0..n_permutations)
                .into_par_iter()
                .map(|i| fit_permuted(data, hp, i))
                .collect::<Result<Vec<PermutationFit>>>()
        },
    );
    let (state, report) = real?;
    let permutations = permutations?;
    log::info!(
        "{} of {} permuted fits converged",
        permutations.iter().filter(|f| f.report.converged).count(),
        n_permutations
    );
    let null_reports = permutations.iter().map(|f| f.report.clone()).collect();
    let scores = assemble_scores(vmap(&state), &permutations, fdr_target);
    Ok(PermutationRun {
        scores,
        state,
        report,
        null_reports,
    })
}
