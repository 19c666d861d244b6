use alloc::vec::Vec;

/// Score cutoff selected by the permutation FDR estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdrThreshold {
    pub threshold: f64,
    pub estimated_fdr: f64,
    pub discoveries: usize,
}

/// Global permutation FDR threshold.
///
/// At a cutoff `t`, `FDR(t) = (#null >= t / #real >= t) * (n_real_tests / n_null_tests)`.
/// Candidates are the distinct real scores scanned from the top; the result
/// is the smallest candidate such that it and every larger candidate have
/// `FDR <= fdr_target`. Returns `None` if even the largest real score fails
/// or either sample is empty.
pub fn fdr_threshold(
    real_scores: &[f64],
    null_scores: &[f64],
    fdr_target: f64,
    n_real_tests: usize,
    n_null_tests: usize,
) -> Option<FdrThreshold> {
    if real_scores.is_empty() || null_scores.is_empty() || n_null_tests == 0 {
        return None;
    }
    let scale = n_real_tests as f64 / n_null_tests as f64;
    let mut real: Vec<f64> = real_scores.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut null: Vec<f64> = null_scores.iter().copied().filter(|v| !v.is_nan()).collect();
    real.sort_by(|a, b| b.total_cmp(a));
    null.sort_by(|a, b| b.total_cmp(a));

    let mut best = None;
    let (mut i_real, mut i_null) = (0, 0);
    while i_real < real.len() {
        let t = real[i_real];
        while i_real < real.len() && real[i_real] >= t {
            i_real += 1;
        }
        while i_null < null.len() && null[i_null] >= t {
            i_null += 1;
        }
        let fdr = (i_null as f64 / i_real as f64) * scale;
        if fdr > fdr_target {
            break;
        }
        best = Some(FdrThreshold {
            threshold: t,
            estimated_fdr: fdr,
            discoveries: i_real,
        });
    }
    best
}
