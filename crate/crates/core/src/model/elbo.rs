use crate::error::{Error, Result};
use crate::math::{
    bernoulli_entropy, beta_entropy, digamma, gaussian_entropy, inverse_gamma_entropy, ln_gamma, LN_2PI,
};

use super::{Dataset, Hyperparameters, Model, VariationalState};

/// The evidence lower bound split into expected log-densities and entropies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    pub likelihood: f64,
    pub inclusions: f64,
    pub sticks: f64,
    pub effects: f64,
    pub ard: f64,
    pub entropy: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.inclusions + self.sticks + self.effects + self.ard + self.entropy
    }
}

/// ELBO of `state` on `data`.
pub fn elbo(state: &VariationalState, data: &Dataset, hp: &Hyperparameters) -> Result<f64> {
    Model::new(data, hp)?.elbo(state)
}

impl Model {
    pub fn elbo(&self, state: &VariationalState) -> Result<f64> {
        Ok(self.elbo_terms(state)?.total())
    }

    pub fn elbo_terms(&self, state: &VariationalState) -> Result<ElboTerms> {
        self.check_state(state)?;
        let hp = &self.hp;
        let (k, p) = (self.k, self.p);
        let m = self.factor_moments(&state.eta)?;

        // E|Y - XZA|^2 = |Y - E[U] Phi|^2 + sum_kp [E|u_k|^2 varphi + spread_k phi^2]
        let mut sq = self.yty;
        for ki in 0..k {
            let phi_k = state.phi.row(ki);
            for pi in 0..p {
                sq -= 2.0 * phi_k[pi] * m.uty[(ki, pi)];
            }
            for kj in 0..k {
                let s = m.cross[(ki, kj)];
                if s != 0.0 {
                    sq += s * crate::matrix::dot(phi_k, state.phi.row(kj));
                }
            }
            let second = m.cross[(ki, ki)] + m.spread[ki];
            for pi in 0..p {
                let mean = phi_k[pi];
                sq += second * state.varphi[(ki, pi)] + m.spread[ki] * mean * mean;
            }
        }
        let np = (self.n * p) as f64;
        let likelihood = -0.5 * np * (LN_2PI + libm::log(hp.sigma2)) - 0.5 * sq / hp.sigma2;

        let a0 = hp.alpha / k as f64;
        let mut inclusions = 0.0;
        let mut sticks = 0.0;
        let mut entropy = 0.0;
        for ki in 0..k {
            let (l1, l2) = (state.lambda[(ki, 0)], state.lambda[(ki, 1)]);
            let psi_sum = digamma(l1 + l2);
            let e_ln_pi = digamma(l1) - psi_sum;
            let e_ln_1m = digamma(l2) - psi_sum;
            for qi in 0..self.q {
                let e = state.eta[(qi, ki)];
                inclusions += e * e_ln_pi + (1.0 - e) * e_ln_1m;
                entropy += bernoulli_entropy(e);
            }
            sticks += libm::log(a0) + (a0 - 1.0) * e_ln_pi;
            entropy += beta_entropy(l1, l2);
        }

        let mut effects = 0.0;
        let mut ard = 0.0;
        let ard_norm = hp.c * libm::log(hp.d) - ln_gamma(hp.c);
        for ki in 0..k {
            for pi in 0..p {
                let shape = state.kappa_shape[(ki, pi)];
                let scale = state.kappa_scale[(ki, pi)];
                let e_ln_delta = libm::log(scale) - digamma(shape);
                let e_inv_delta = shape / scale;
                let mean = state.phi[(ki, pi)];
                let var = state.varphi[(ki, pi)];
                effects += -0.5 * (LN_2PI + e_ln_delta) - 0.5 * e_inv_delta * (var + mean * mean);
                ard += ard_norm - (hp.c + 1.0) * e_ln_delta - hp.d * e_inv_delta;
                entropy += gaussian_entropy(var) + inverse_gamma_entropy(shape, scale);
            }
        }

        let terms = ElboTerms {
            likelihood,
            inclusions,
            sticks,
            effects,
            ard,
            entropy,
        };
        if !terms.total().is_finite() {
            return Err(Error::numerical(
                "elbo",
                "non-finite bound (degenerate variational parameters)",
            ));
        }
        Ok(terms)
    }
}
