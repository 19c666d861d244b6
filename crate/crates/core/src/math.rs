//! Scalar special functions and distribution helpers.

pub use statrs::function::gamma::{digamma, ln_gamma};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `x ln x` with the `0 ln 0 = 0` convention.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * libm::log(x)
    }
}

pub fn bernoulli_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

pub fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
}

pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (LN_2PI + 1.0 + libm::log(variance))
}

/// Entropy of an inverse-gamma with the given shape and scale.
pub fn inverse_gamma_entropy(shape: f64, scale: f64) -> f64 {
    shape + libm::log(scale) + ln_gamma(shape) - (1.0 + shape) * digamma(shape)
}

/// Two-sided standard-normal tail probability `P(|Z| >= |t|)`.
pub fn normal_two_sided_p(t: f64) -> f64 {
    libm::erfc(libm::fabs(t) / core::f64::consts::SQRT_2)
}
