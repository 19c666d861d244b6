//! Joint association mapping between many SNPs and many traits through a
//! sparse, low-rank factor regression.
//!
//! The trait matrix is modelled as `Y = X Z A + noise`, where `Z` is a binary
//! SNP-to-factor inclusion matrix under a (truncated) Indian Buffet Process
//! prior and `A` carries factor-to-trait effects under an ARD prior. Posterior
//! inference is mean-field coordinate ascent; association between SNP `q` and
//! trait `p` is scored by `E[Z] E[A]`, with significance calibrated by
//! permutation FDR.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! wall-clock benchmarking live in the `berrri` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod association;
mod error;
pub mod eval;
pub mod math;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod simgen;
pub mod vb;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{Dataset, Genotypes, Hyperparameters, PlantedTruth, VariationalState};
