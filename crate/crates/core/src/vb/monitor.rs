//! Geweke-style stationarity check on per-block parameter traces.
//!
//! After discarding burn-in, the mean of the first 10% of a trace is compared
//! with the mean of the last 50%:
//! `t = (m1 - m2) / sqrt(s1 / n1 + s2 / n2)` with `s` the segment standard
//! deviation, and a two-sided standard-normal p-value.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::normal_two_sided_p;
use crate::model::VariationalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Lambda,
    Eta,
    Phi,
    Varphi,
    Kappa,
}

pub const BLOCKS: [Block; 5] = [Block::Lambda, Block::Eta, Block::Phi, Block::Varphi, Block::Kappa];

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::Lambda => "lambda",
            Block::Eta => "eta",
            Block::Phi => "phi",
            Block::Varphi => "varphi",
            Block::Kappa => "kappa",
        }
    }

    fn summary(self, state: &VariationalState) -> f64 {
        match self {
            Block::Lambda => state.lambda.mean(),
            Block::Eta => state.eta.mean(),
            Block::Phi => state.phi.mean(),
            Block::Varphi => state.varphi.mean(),
            Block::Kappa => 0.5 * (state.kappa_shape.mean() + state.kappa_scale.mean()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCheck {
    pub t: f64,
    pub p: f64,
    /// Both segments had zero spread.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCheck {
    pub blocks: [BlockCheck; 5],
    pub converged: bool,
}

impl ConvergenceCheck {
    pub fn p_values(&self) -> [f64; 5] {
        self.blocks.map(|b| b.p)
    }
}

/// Compare the head and tail of an already burn-in-trimmed trace.
/// Returns `None` when the trace is shorter than 20 entries.
pub fn geweke(trace: &[f64]) -> Option<BlockCheck> {
    let len = trace.len();
    if len < 20 {
        return None;
    }
    let n1 = len / 10;
    let n2 = len / 2;
    let (m1, s1) = mean_sd(&trace[..n1]);
    let (m2, s2) = mean_sd(&trace[len - n2..]);
    let denom = libm::sqrt(s1 / n1 as f64 + s2 / n2 as f64);
    if denom == 0.0 {
        // Flat segments: stationary iff they sit at the same level.
        let (t, p) = if m1 == m2 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Some(BlockCheck { t, p, degenerate: true });
    }
    let t = (m1 - m2) / denom;
    Some(BlockCheck {
        t,
        p: normal_two_sided_p(t),
        degenerate: false,
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Per-block traces of the block means, one entry per iteration.
#[derive(Debug, Clone)]
pub struct TraceMonitor {
    traces: [Vec<f64>; 5],
    burn_in: usize,
    check_interval: usize,
}

impl TraceMonitor {
    pub fn new(burn_in: usize, check_interval: usize) -> Self {
        TraceMonitor {
            traces: Default::default(),
            burn_in,
            check_interval,
        }
    }

    pub fn record(&mut self, state: &VariationalState) {
        for (trace, block) in self.traces.iter_mut().zip(BLOCKS) {
            trace.push(block.summary(state));
        }
    }

    /// Record raw block summaries (in `BLOCKS` order).
    pub fn record_values(&mut self, values: [f64; 5]) {
        for (trace, v) in self.traces.iter_mut().zip(values) {
            trace.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.traces[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn trace(&self, block: Block) -> &[f64] {
        &self.traces[BLOCKS.iter().position(|&b| b == block).unwrap_or(0)]
    }

    /// Whether the iteration just recorded is a scheduled check.
    pub fn is_due(&self) -> bool {
        let len = self.len();
        len >= self.burn_in + self.check_interval && (len - self.burn_in).is_multiple_of(self.check_interval)
    }

    pub fn check(&self, p_thresh: f64) -> Result<ConvergenceCheck> {
        let mut blocks = [BlockCheck {
            t: 0.0,
            p: 1.0,
            degenerate: false,
        }; 5];
        for (out, trace) in blocks.iter_mut().zip(&self.traces) {
            let kept = trace.get(self.burn_in..).unwrap_or(&[]);
            *out = geweke(kept).ok_or_else(|| Error::Argument {
                name: "trace",
                reason: alloc::format!("{} post-burn-in entries, need at least 20", kept.len()),
            })?;
        }
        let converged = blocks.iter().all(|b| b.p > p_thresh);
        Ok(ConvergenceCheck { blocks, converged })
    }
}
