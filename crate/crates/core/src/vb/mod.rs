//! Coordinate-ascent variational inference.
//!
//! One sweep updates the stick weights, then every inclusion probability,
//! then the effect-size posteriors, then the ARD variances. Each block update
//! is the exact maximiser of the ELBO with all other blocks held fixed, so the
//! bound never decreases.

mod fit;
mod monitor;
mod updates;

pub use fit::{fit, fit_from, fit_with_rng, CheckRecord, FitReport};
pub use monitor::{geweke, Block, BlockCheck, ConvergenceCheck, TraceMonitor, BLOCKS};
pub use updates::EtaContext;
