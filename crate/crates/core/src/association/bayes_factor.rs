//! Conjugate single-SNP linear-model Bayes factor, used as a univariate
//! baseline against the multi-SNP scores.

use crate::matrix::Matrix;
use crate::model::Dataset;

pub const DEFAULT_PRIOR_EFFECT_SD: f64 = 0.5;

/// `log10` Bayes factor of `y_p = mu + beta x_q + e` against `y_p = mu + e`,
/// with `beta ~ N(0, prior_effect_sd^2)`, known noise variance `sigma2` and
/// a flat prior on the intercept (equivalently, centred `x` and `y`).
/// `None` for a monomorphic SNP.
pub fn univariate_bf(data: &Dataset, q: usize, p: usize, prior_effect_sd: f64, sigma2: f64) -> Option<f64> {
    let n = data.n_samples();
    let x_mean = (0..n).map(|i| data.genotypes.get(i, q) as f64).sum::<f64>() / n as f64;
    let y_mean = (0..n).map(|i| data.traits[(i, p)]).sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let x = data.genotypes.get(i, q) as f64 - x_mean;
        sxx += x * x;
        sxy += x * (data.traits[(i, p)] - y_mean);
    }
    if sxx <= 0.0 {
        return None;
    }
    let v = prior_effect_sd * prior_effect_sd;
    let r = v * sxx / sigma2;
    let ln_bf = -0.5 * libm::log1p(r) + v * sxy * sxy / (2.0 * sigma2 * sigma2 * (1.0 + r));
    Some(ln_bf / core::f64::consts::LN_10)
}

/// Q x P matrix of `log10` Bayes factors; monomorphic SNPs score `-inf`.
pub fn univariate_bf_matrix(data: &Dataset, prior_effect_sd: f64, sigma2: f64) -> Matrix {
    Matrix::from_fn(data.n_snps(), data.n_traits(), |q, p| {
        univariate_bf(data, q, p, prior_effect_sd, sigma2).unwrap_or(f64::NEG_INFINITY)
    })
}
