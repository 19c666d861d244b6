use crate::error::{Error, Result};
use crate::math::{ln_gamma, LN_2PI};
use crate::matrix::Matrix;

use super::{design, Dataset, Hyperparameters};

/// A concrete assignment of every latent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    /// Q x K binary inclusions.
    pub z: Matrix,
    /// K x P effects.
    pub a: Matrix,
    /// K stick weights in (0, 1).
    pub pi: alloc::vec::Vec<f64>,
    /// K x P ARD variances.
    pub delta: Matrix,
}

/// Additive pieces of the unnormalised log joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogJointTerms {
    pub likelihood: f64,
    pub inclusions: f64,
    pub sticks: f64,
    pub effects: f64,
    pub ard: f64,
}

impl LogJointTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.inclusions + self.sticks + self.effects + self.ard
    }
}

/// `log p(Z, A, pi, delta, Y | X, theta)` at a point.
pub fn log_joint(point: &PointEstimate, data: &Dataset, hp: &Hyperparameters) -> Result<LogJointTerms> {
    let (q, p) = (data.n_snps(), data.n_traits());
    let k = point.z.cols();
    if point.z.rows() != q {
        return Err(Error::shape("z", (q, k), point.z.shape()));
    }
    if point.a.shape() != (k, p) {
        return Err(Error::shape("a", (k, p), point.a.shape()));
    }
    if point.delta.shape() != (k, p) {
        return Err(Error::shape("delta", (k, p), point.delta.shape()));
    }
    if point.pi.len() != k || point.pi.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Argument {
            name: "pi",
            reason: alloc::string::String::from("need K stick weights strictly inside (0, 1)"),
        });
    }
    if point.delta.as_slice().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Argument {
            name: "delta",
            reason: alloc::string::String::from("variances must be > 0"),
        });
    }

    let (x, y, _, _) = design(data, hp.center);
    let fitted = x.matmul(&point.z)?.matmul(&point.a)?;
    let rss: f64 = y
        .as_slice()
        .iter()
        .zip(fitted.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let np = (data.n_samples() * p) as f64;
    let likelihood = -0.5 * np * (LN_2PI + libm::log(hp.sigma2)) - 0.5 * rss / hp.sigma2;

    let mut inclusions = 0.0;
    for qi in 0..q {
        for (ki, &pi) in point.pi.iter().enumerate() {
            inclusions += if point.z[(qi, ki)] != 0.0 {
                libm::log(pi)
            } else {
                libm::log(1.0 - pi)
            };
        }
    }

    let a0 = hp.alpha / k as f64;
    let sticks: f64 = point
        .pi
        .iter()
        .map(|&pi| libm::log(a0) + (a0 - 1.0) * libm::log(pi))
        .sum();

    let mut effects = 0.0;
    let mut ard = 0.0;
    let ard_norm = hp.c * libm::log(hp.d) - ln_gamma(hp.c);
    for (&a, &delta) in point.a.as_slice().iter().zip(point.delta.as_slice()) {
        let ln_delta = libm::log(delta);
        effects += -0.5 * (LN_2PI + ln_delta) - 0.5 * a * a / delta;
        ard += ard_norm - (hp.c + 1.0) * ln_delta - hp.d / delta;
    }

    let terms = LogJointTerms {
        likelihood,
        inclusions,
        sticks,
        effects,
        ard,
    };
    if !terms.total().is_finite() {
        return Err(Error::numerical("log_joint", "non-finite value"));
    }
    Ok(terms)
}
