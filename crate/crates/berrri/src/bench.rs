//! Wall-clock timing ladder over the number of SNPs.

use std::time::Instant;

use berrri_core::eval::mean_sd;
use berrri_core::model::Model;
use berrri_core::rng::{child, Stream};
use berrri_core::simgen::{simulate, SimConfig};
use berrri_core::{Hyperparameters, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub q: usize,
    /// Seconds per fit (setup plus all sweeps), mean over repetitions.
    pub mean_seconds: f64,
    /// Sample standard deviation; zero for a single repetition.
    pub sd_seconds: f64,
    /// Seconds per sweep, mean over repetitions.
    pub sweep_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    pub ladder: Vec<usize>,
    pub n: usize,
    pub p: usize,
    pub k_max: usize,
    pub repetitions: usize,
    /// Fixed number of sweeps per fit, so that runs at different sizes do the
    /// same amount of work per parameter.
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            ladder: vec![100, 200],
            n: 100,
            p: 25,
            k_max: 10,
            repetitions: 3,
            sweeps: 20,
            seed: 0,
        }
    }
}

/// Time `sweeps` coordinate-ascent sweeps once on simulated data with `q`
/// SNPs. Returns (total seconds, seconds per sweep).
pub fn time_fit(cfg: &LadderConfig, q: usize, repetition: usize) -> Result<(f64, f64)> {
    let sim = SimConfig {
        n: cfg.n,
        p: cfg.p,
        q,
        k_true: q.min(5),
        seed: cfg.seed.wrapping_add(repetition as u64),
        ..Default::default()
    };
    let (data, _) = simulate(&sim)?;
    let hp = Hyperparameters {
        k_max: Some(cfg.k_max),
        seed: sim.seed,
        ..Default::default()
    };
    let start = Instant::now();
    let model = Model::new(&data, &hp)?;
    let mut state = model.initial_state(&mut child(hp.seed, Stream::Init, 0))?;
    let sweep_start = Instant::now();
    for _ in 0..cfg.sweeps {
        model.sweep(&mut state)?;
    }
    let sweep_total = sweep_start.elapsed().as_secs_f64();
    Ok((start.elapsed().as_secs_f64(), sweep_total / cfg.sweeps.max(1) as f64))
}

/// Strictly serial: one fit at a time.
pub fn timing_ladder(cfg: &LadderConfig) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for &q in &cfg.ladder {
        let mut totals = Vec::with_capacity(cfg.repetitions);
        let mut sweeps = Vec::with_capacity(cfg.repetitions);
        for rep in 0..cfg.repetitions.max(1) {
            let (t, s) = time_fit(cfg, q, rep)?;
            totals.push(t);
            sweeps.push(s);
        }
        let (mean_seconds, sd_seconds) = mean_sd(&totals);
        rows.push(TimingRow {
            q,
            mean_seconds,
            sd_seconds,
            sweep_seconds: mean_sd(&sweeps).0,
        });
        log::info!(
            "Q={q}: {mean_seconds:.4}s per fit, {:.6}s per sweep",
            rows.last().unwrap().sweep_seconds
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_rung_and_zero_sd_for_one_repetition() {
        let cfg = LadderConfig {
            ladder: vec![10, 20, 30],
            n: 20,
            p: 3,
            k_max: 4,
            repetitions: 1,
            sweeps: 2,
            seed: 1,
        };
        let rows = timing_ladder(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.sd_seconds == 0.0 && r.mean_seconds > 0.0));
        assert_eq!(rows.iter().map(|r| r.q).collect::<Vec<_>>(), [10, 20, 30]);
    }
}
