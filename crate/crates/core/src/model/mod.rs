//! Generative model, domain types and the evidence lower bound.
//!
//! `Y = X Z A + e`, `e[n,.] ~ N(0, sigma2 I)`, `z[q,k] ~ Bernoulli(pi[k])`,
//! `pi[k] ~ Beta(alpha / K, 1)`, `A[k,p] ~ N(0, delta[k,p])`,
//! `delta[k,p] ~ InvGamma(c, d)`.

mod elbo;
mod joint;
mod types;

pub use elbo::{elbo, ElboTerms};
pub use joint::{log_joint, LogJointTerms, PointEstimate};
pub use types::{Dataset, Genotypes, Hyperparameters, Locus, PlantedTruth, VariationalState};

use alloc::vec::Vec;

use crate::error::Result;
use crate::matrix::Matrix;

/// Default truncation cap when `k_max` is not given.
pub const DEFAULT_K_CAP: usize = 50;

/// Data reduced to the sufficient statistics the updates need, together
/// with validated hyperparameters.
///
/// All per-sweep work runs on `X^T X` (Q x Q), `X^T Y` (Q x P) and `|Y|^2`,
/// so the number of individuals only enters through the one-off
/// construction.
#[derive(Debug, Clone)]
pub struct Model {
    pub(crate) hp: Hyperparameters,
    pub(crate) k: usize,
    pub(crate) n: usize,
    pub(crate) p: usize,
    pub(crate) q: usize,
    pub(crate) gram: Matrix,
    pub(crate) gram_diag: Vec<f64>,
    pub(crate) xty: Matrix,
    pub(crate) yty: f64,
    pub(crate) x_means: Vec<f64>,
    pub(crate) y_means: Vec<f64>,
}

impl Model {
    pub fn new(data: &Dataset, hp: &Hyperparameters) -> Result<Self> {
        let q = data.n_snps();
        hp.validate()?;
        let k = hp.truncation(q);
        let (x, y, x_means, y_means) = design(data, hp.center);
        let gram = x.tr_matmul(&x)?;
        let xty = x.tr_matmul(&y)?;
        let yty = y.as_slice().iter().map(|v| v * v).sum();
        let gram_diag = (0..q).map(|i| gram[(i, i)]).collect();
        Ok(Model {
            hp: hp.clone(),
            k,
            n: data.n_samples(),
            p: data.n_traits(),
            q,
            gram,
            gram_diag,
            xty,
            yty,
            x_means,
            y_means,
        })
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    /// Truncation level K of the finite IBP approximation.
    pub fn truncation(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.q, self.p, self.k)
    }

    /// Posterior-mean reconstruction `E[Y] = X E[Z] E[A]` for any genotype
    /// matrix with the training SNP layout (in-sample or held out).
    pub fn predict(&self, state: &VariationalState, genotypes: &Genotypes) -> Result<Matrix> {
        if genotypes.cols() != self.q {
            return Err(crate::Error::shape(
                "predict",
                (genotypes.rows(), self.q),
                (genotypes.rows(), genotypes.cols()),
            ));
        }
        let mut x = genotypes.to_matrix();
        if self.hp.center {
            for r in 0..x.rows() {
                for (v, m) in x.row_mut(r).iter_mut().zip(&self.x_means) {
                    *v -= m;
                }
            }
        }
        let coef = state.eta.matmul(&state.phi)?;
        let mut pred = x.matmul(&coef)?;
        if self.hp.center {
            for r in 0..pred.rows() {
                for (v, m) in pred.row_mut(r).iter_mut().zip(&self.y_means) {
                    *v += m;
                }
            }
        }
        Ok(pred)
    }
}

/// Genotype and trait matrices as used by the likelihood (column-centred when
/// `center` is set), plus the removed means.
pub(crate) fn design(data: &Dataset, center: bool) -> (Matrix, Matrix, Vec<f64>, Vec<f64>) {
    let mut x = data.genotypes.to_matrix();
    let mut y = data.traits.clone();
    if center {
        let xm = x.center_columns();
        let ym = y.center_columns();
        (x, y, xm, ym)
    } else {
        let xm = alloc::vec![0.0; x.cols()];
        let ym = alloc::vec![0.0; y.cols()];
        (x, y, xm, ym)
    }
}

/// Expectations of the factor scores `u_k = X z_k` under q(Z).
#[derive(Debug, Clone)]
pub(crate) struct FactorMoments {
    /// K x K: `E[u_k]^T E[u_k']`.
    pub cross: Matrix,
    /// K x P: `E[u_k]^T Y`.
    pub uty: Matrix,
    /// K: `E|u_k|^2 - |E u_k|^2 = sum_q eta(1 - eta) |x_q|^2`.
    pub spread: Vec<f64>,
}

impl Model {
    pub(crate) fn factor_moments(&self, eta: &Matrix) -> Result<FactorMoments> {
        let g_eta = self.gram.matmul(eta)?;
        let cross = eta.tr_matmul(&g_eta)?;
        let uty = eta.tr_matmul(&self.xty)?;
        let spread = (0..eta.cols())
            .map(|k| {
                (0..self.q)
                    .map(|q| {
                        let e = eta[(q, k)];
                        e * (1.0 - e) * self.gram_diag[q]
                    })
                    .sum()
            })
            .collect();
        Ok(FactorMoments { cross, uty, spread })
    }

    pub(crate) fn check_state(&self, state: &VariationalState) -> Result<()> {
        let (q, k, p) = state.dims();
        if (q, k, p) != (self.q, self.k, self.p) {
            return Err(crate::Error::Shape {
                context: "variational state (Q, K, P)",
                expected: alloc::format!("({}, {}, {})", self.q, self.k, self.p),
                actual: alloc::format!("({q}, {k}, {p})"),
            });
        }
        Ok(())
    }
}
