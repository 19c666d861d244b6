//! Seeded random streams.
//!
//! Every stochastic component draws from a child stream keyed by
//! `(master seed, component tag, index)`, so adding permutations or factors
//! never perturbs streams that already exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Permutation = 2,
    PermutationInit = 3,
    Genotypes = 4,
    Subset = 5,
    Inclusion = 6,
    Effects = 7,
    Noise = 8,
    Holdout = 9,
}

pub fn child(master: u64, stream: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((stream as u64) << 48) ^ index);
    rng
}
