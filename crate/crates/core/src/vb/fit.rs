use alloc::vec::Vec;

use crate::error::Result;
use crate::model::{Dataset, Hyperparameters, Model, VariationalState};
use crate::rng::{child, Rng, Stream};

use super::monitor::TraceMonitor;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub iteration: usize,
    pub p_values: [f64; 5],
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_elbo: f64,
    pub effective_k: usize,
    pub truncation: usize,
    /// Wall-clock time; zero in `no_std` builds. Not part of the
    /// deterministic output.
    pub wall_seconds: f64,
    /// p-values of the last convergence check, in `BLOCKS` order.
    pub p_values: Option<[f64; 5]>,
    pub elbo_trace: Vec<f64>,
    pub checks: Vec<CheckRecord>,
}

/// Fit from a random start drawn from the `(seed, init)` stream.
pub fn fit(data: &Dataset, hp: &Hyperparameters) -> Result<(VariationalState, FitReport)> {
    fit_with_rng(data, hp, &mut child(hp.seed, Stream::Init, 0))
}

pub fn fit_with_rng(data: &Dataset, hp: &Hyperparameters, rng: &mut Rng) -> Result<(VariationalState, FitReport)> {
    let model = Model::new(data, hp)?;
    let state = model.initial_state(rng)?;
    fit_from(&model, state)
}

/// Run sweeps from `state` until the convergence monitor passes or
/// `max_iter` is reached. Non-convergence is reported, not an error.
pub fn fit_from(model: &Model, mut state: VariationalState) -> Result<(VariationalState, FitReport)> {
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();
    let hp = model.hyperparameters();
    let mut monitor = TraceMonitor::new(hp.burn_in, hp.check_interval);
    let mut elbo_trace = Vec::with_capacity(hp.max_iter);
    let mut checks = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < hp.max_iter {
        model.sweep(&mut state)?;
        iterations += 1;
        monitor.record(&state);
        elbo_trace.push(model.elbo(&state)?);
        if monitor.is_due() {
            let check = monitor.check(hp.p_thresh)?;
            log::info!(
                "iteration {iterations}: elbo {:.6} p-values {:?}",
                elbo_trace[iterations - 1],
                check.p_values()
            );
            checks.push(CheckRecord {
                iteration: iterations,
                p_values: check.p_values(),
                converged: check.converged,
            });
            if check.converged {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!("no convergence after {iterations} iterations");
    }
    #[cfg(feature = "std")]
    let wall_seconds = started.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let wall_seconds = 0.0;
    let report = FitReport {
        converged,
        iterations,
        final_elbo: elbo_trace.last().copied().unwrap_or(f64::NAN),
        effective_k: state.effective_k(),
        truncation: model.truncation(),
        wall_seconds,
        p_values: checks.last().map(|c| c.p_values),
        elbo_trace,
        checks,
    };
    Ok((state, report))
}
