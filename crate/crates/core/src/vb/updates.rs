use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::math::{digamma, logistic};
use crate::matrix::{dot, Matrix};
use crate::model::{Model, VariationalState};
use crate::rng::Rng;

/// Per-factor quantities that stay fixed while the inclusion probabilities
/// of one factor are swept.
#[derive(Debug, Clone)]
pub struct EtaContext {
    k: usize,
    prior_logit: f64,
    /// `sum_p E[A_kp^2]`.
    second_moment: f64,
    /// `(X^T Y phi_k)_q`.
    target: Vec<f64>,
    /// `sum_{k' != k} eta[q, k'] (phi_k' . phi_k)`.
    others: Vec<f64>,
    /// Current column `eta[., k]`.
    column: Vec<f64>,
}

impl Model {
    /// Initial state: inclusions uniform on [0.25, 0.75], stick and ARD
    /// parameters at their prior-consistent values, and loadings set to
    /// their conditional posterior given those inclusions.
    pub fn initial_state(&self, rng: &mut Rng) -> Result<VariationalState> {
        let (q, k, p) = (self.q, self.k, self.p);
        let hp = &self.hp;
        let eta = Matrix::from_fn(q, k, |_, _| rng.random_range(0.25..0.75));
        let kappa_shape = Matrix::filled(k, p, hp.c + 0.5);
        let kappa_scale = Matrix::filled(k, p, hp.d + 0.5);
        let varphi = Matrix::filled(k, p, (hp.d + 0.5) / (hp.c + 0.5));
        let lambda = Matrix::from_fn(k, 2, |_, c| if c == 0 { hp.alpha / k as f64 } else { 1.0 });
        let mut state = VariationalState {
            lambda,
            eta,
            phi: Matrix::zeros(k, p),
            varphi,
            kappa_shape,
            kappa_scale,
            iteration: 0,
        };
        self.update_loadings(&mut state)?;
        Ok(state)
    }

    pub fn update_lambda(&self, state: &mut VariationalState, k: usize) {
        let included: f64 = (0..self.q).map(|q| state.eta[(q, k)]).sum();
        let excluded: f64 = (0..self.q).map(|q| 1.0 - state.eta[(q, k)]).sum();
        state.lambda[(k, 0)] = self.hp.alpha / self.k as f64 + included;
        state.lambda[(k, 1)] = 1.0 + excluded;
    }

    pub fn eta_context(&self, state: &VariationalState, k: usize) -> EtaContext {
        let (q, p) = (self.q, self.p);
        let phi_k = state.phi.row(k);
        let overlap: Vec<f64> = (0..self.k)
            .map(|j| if j == k { 0.0 } else { dot(state.phi.row(j), phi_k) })
            .collect();
        let second_moment = (0..p).map(|i| state.varphi[(k, i)] + phi_k[i] * phi_k[i]).sum();
        EtaContext {
            k,
            prior_logit: digamma(state.lambda[(k, 0)]) - digamma(state.lambda[(k, 1)]),
            second_moment,
            target: (0..q).map(|i| dot(self.xty.row(i), phi_k)).collect(),
            others: (0..q).map(|i| dot(state.eta.row(i), &overlap)).collect(),
            column: (0..q).map(|i| state.eta[(i, k)]).collect(),
        }
    }

    /// Expected complete-data log-odds of `z[q,k] = 1`.
    pub fn eta_logit(&self, ctx: &EtaContext, q: usize) -> f64 {
        let s2 = self.hp.sigma2;
        let g = self.gram.row(q);
        let g_qq = self.gram_diag[q];
        let same = dot(g, &ctx.column) - g_qq * ctx.column[q];
        let other = dot(g, &ctx.others);
        ctx.prior_logit - ctx.second_moment * (0.5 * g_qq + same) / s2 + (ctx.target[q] - other) / s2
    }

    fn apply_eta(&self, state: &mut VariationalState, ctx: &mut EtaContext, q: usize) -> Result<()> {
        let zeta = self.eta_logit(ctx, q);
        if !zeta.is_finite() {
            return Err(Error::numerical(
                "update_eta",
                alloc::format!("non-finite log-odds at q={q}, k={}", ctx.k),
            ));
        }
        let value = logistic(zeta);
        state.eta[(q, ctx.k)] = value;
        ctx.column[q] = value;
        Ok(())
    }

    pub fn update_eta(&self, state: &mut VariationalState, k: usize, q: usize) -> Result<()> {
        let mut ctx = self.eta_context(state, k);
        self.apply_eta(state, &mut ctx, q)
    }

    /// Update `eta[., k]` for every SNP in ascending order.
    pub fn update_eta_factor(&self, state: &mut VariationalState, k: usize) -> Result<()> {
        let mut ctx = self.eta_context(state, k);
        for q in 0..self.q {
            self.apply_eta(state, &mut ctx, q)?;
        }
        Ok(())
    }

    /// Gaussian posterior of `A[k, .]`: precision `E|u_k|^2 / sigma2 + E[1/delta]`,
    /// mean against the residual left by the other factors.
    pub fn update_a(&self, state: &mut VariationalState, k: usize) -> Result<()> {
        let g_eta_k = self
            .gram
            .matmul(&Matrix::from_fn(self.q, 1, |q, _| state.eta[(q, k)]))?;
        let cross: Vec<f64> = (0..self.k)
            .map(|j| (0..self.q).map(|q| state.eta[(q, j)] * g_eta_k[(q, 0)]).sum())
            .collect();
        let uty: Vec<f64> = (0..self.p)
            .map(|p| (0..self.q).map(|q| state.eta[(q, k)] * self.xty[(q, p)]).sum())
            .collect();
        let spread: f64 = (0..self.q)
            .map(|q| {
                let e = state.eta[(q, k)];
                e * (1.0 - e) * self.gram_diag[q]
            })
            .sum();
        self.apply_a(state, k, &cross, &uty, spread)
    }

    fn apply_a(&self, state: &mut VariationalState, k: usize, cross: &[f64], uty: &[f64], spread: f64) -> Result<()> {
        let s2 = self.hp.sigma2;
        let data_precision = (cross[k] + spread) / s2;
        for p in 0..self.p {
            let prior_precision = state.kappa_shape[(k, p)] / state.kappa_scale[(k, p)];
            let precision = data_precision + prior_precision;
            if !(precision > 0.0 && precision.is_finite()) {
                return Err(Error::numerical(
                    "update_a",
                    alloc::format!("precision {precision} not positive definite at k={k}, p={p}"),
                ));
            }
            let mut residual = uty[p];
            for (j, &c) in cross.iter().enumerate() {
                if j != k && c != 0.0 {
                    residual -= c * state.phi[(j, p)];
                }
            }
            let var = 1.0 / precision;
            state.varphi[(k, p)] = var;
            state.phi[(k, p)] = var * residual / s2;
        }
        Ok(())
    }

    /// All loading rows in ascending factor order.
    pub fn update_loadings(&self, state: &mut VariationalState) -> Result<()> {
        let m = self.factor_moments(&state.eta)?;
        for k in 0..self.k {
            self.apply_a(state, k, m.cross.row(k), m.uty.row(k), m.spread[k])?;
        }
        Ok(())
    }

    pub fn update_kappa(&self, state: &mut VariationalState, k: usize, p: usize) {
        let mean = state.phi[(k, p)];
        state.kappa_shape[(k, p)] = self.hp.c + 0.5;
        state.kappa_scale[(k, p)] = self.hp.d + 0.5 * (state.varphi[(k, p)] + mean * mean);
    }

    /// One full coordinate-ascent pass.
    pub fn sweep(&self, state: &mut VariationalState) -> Result<()> {
        self.check_state(state)?;
        for k in 0..self.k {
            self.update_lambda(state, k);
        }
        for k in 0..self.k {
            self.update_eta_factor(state, k)?;
        }
        self.update_loadings(state)?;
        for k in 0..self.k {
            for p in 0..self.p {
                self.update_kappa(state, k, p);
            }
        }
        state.iteration += 1;
        Ok(())
    }
}
