//! Planted-truth simulation.
//!
//! Each factor starts from a uniformly chosen index SNP and co-includes
//! every SNP whose absolute genotype correlation with it exceeds
//! `correlation_floor`. Effects are dense Gaussian, and the traits are
//! `X Z A` plus i.i.d. Gaussian noise.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Dataset, Genotypes, PlantedTruth};
use crate::rng::{child, Rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub enum GenotypeSource {
    /// Independent SNPs, `Binomial(2, f)` with `f ~ Uniform(maf_min, maf_max)`.
    Synthetic { maf_min: f64, maf_max: f64 },
    /// Random subset of rows and columns of a supplied matrix.
    External {
        genotypes: Genotypes,
        sample_ids: Vec<String>,
        snp_ids: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub k_true: usize,
    pub effect_sd: f64,
    /// Zero gives noiseless traits.
    pub noise_sd: f64,
    pub correlation_floor: f64,
    pub seed: u64,
    pub genotypes: GenotypeSource,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 100,
            p: 25,
            q: 100,
            k_true: 5,
            effect_sd: 0.5,
            noise_sd: 1.0,
            correlation_floor: 0.8,
            seed: 0,
            genotypes: GenotypeSource::Synthetic {
                maf_min: 0.05,
                maf_max: 0.5,
            },
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::Argument { name, reason });
        if self.n == 0 || self.p == 0 || self.q == 0 || self.k_true == 0 {
            return bad(
                "dimensions",
                alloc::format!(
                    "n, p, q, k_true must be >= 1 (got {}, {}, {}, {})",
                    self.n,
                    self.p,
                    self.q,
                    self.k_true
                ),
            );
        }
        if self.k_true > self.q {
            return bad(
                "k_true",
                alloc::format!("{} factors exceed {} SNPs", self.k_true, self.q),
            );
        }
        if !(self.effect_sd > 0.0 && self.effect_sd.is_finite()) {
            return bad("effect_sd", alloc::format!("must be > 0, got {}", self.effect_sd));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd", alloc::format!("must be >= 0, got {}", self.noise_sd));
        }
        if !(0.0..=1.0).contains(&self.correlation_floor) {
            return bad(
                "correlation_floor",
                alloc::format!("must lie in [0, 1], got {}", self.correlation_floor),
            );
        }
        if let GenotypeSource::Synthetic { maf_min, maf_max } = self.genotypes {
            check_maf(maf_min, maf_max)?;
        }
        Ok(())
    }
}

fn check_maf(lo: f64, hi: f64) -> Result<()> {
    if lo > 0.0 && lo <= hi && hi <= 0.5 {
        Ok(())
    } else {
        Err(Error::Argument {
            name: "maf_range",
            reason: alloc::format!("need 0 < min <= max <= 0.5, got [{lo}, {hi}]"),
        })
    }
}

/// Independent SNPs with per-SNP allele frequency drawn uniformly from
/// `[maf_min, maf_max]`. Returns the genotypes and the drawn frequencies.
pub fn synthetic_genotypes(
    n: usize,
    q: usize,
    maf_min: f64,
    maf_max: f64,
    rng: &mut Rng,
) -> Result<(Genotypes, Vec<f64>)> {
    check_maf(maf_min, maf_max)?;
    let freqs: Vec<f64> = (0..q)
        .map(|_| {
            if maf_min == maf_max {
                maf_min
            } else {
                rng.random_range(maf_min..=maf_max)
            }
        })
        .collect();
    let mut values = alloc::vec![0u8; n * q];
    for r in 0..n {
        for (c, &f) in freqs.iter().enumerate() {
            values[r * q + c] = rng.random_bool(f) as u8 + rng.random_bool(f) as u8;
        }
    }
    Ok((Genotypes::new(n, q, values)?, freqs))
}

/// Pearson correlation of two genotype columns; zero if either is constant.
pub fn genotype_correlation(g: &Genotypes, a: usize, b: usize) -> f64 {
    let n = g.rows() as f64;
    let (mut sa, mut sb) = (0.0, 0.0);
    for r in 0..g.rows() {
        sa += g.get(r, a) as f64;
        sb += g.get(r, b) as f64;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for r in 0..g.rows() {
        let x = g.get(r, a) as f64 - ma;
        let y = g.get(r, b) as f64 - mb;
        cov += x * y;
        va += x * x;
        vb += y * y;
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / libm::sqrt(va * vb)
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<(Dataset, PlantedTruth)> {
    cfg.validate()?;
    let (genotypes, sample_ids, snp_ids) = match &cfg.genotypes {
        GenotypeSource::Synthetic { maf_min, maf_max } => {
            let mut rng = child(cfg.seed, Stream::Genotypes, 0);
            let (g, _) = synthetic_genotypes(cfg.n, cfg.q, *maf_min, *maf_max, &mut rng)?;
            (g, None, None)
        }
        GenotypeSource::External {
            genotypes,
            sample_ids,
            snp_ids,
        } => {
            if genotypes.rows() < cfg.n || genotypes.cols() < cfg.q {
                return Err(Error::GenotypeSourceTooSmall {
                    required_rows: cfg.n,
                    required_cols: cfg.q,
                    available_rows: genotypes.rows(),
                    available_cols: genotypes.cols(),
                });
            }
            let mut rng = child(cfg.seed, Stream::Subset, 0);
            let mut rows = rand::seq::index::sample(&mut rng, genotypes.rows(), cfg.n).into_vec();
            let mut cols = rand::seq::index::sample(&mut rng, genotypes.cols(), cfg.q).into_vec();
            rows.sort_unstable();
            cols.sort_unstable();
            let pick = |ids: &[String], idx: &[usize]| -> Option<Vec<String>> {
                (ids.len() >= idx.iter().max().map_or(0, |m| m + 1))
                    .then(|| idx.iter().map(|&i| ids[i].clone()).collect())
            };
            (
                genotypes.select(&rows, &cols),
                pick(sample_ids, &rows),
                pick(snp_ids, &cols),
            )
        }
    };

    let mut rng = child(cfg.seed, Stream::Inclusion, 0);
    let mut z = Matrix::zeros(cfg.q, cfg.k_true);
    for k in 0..cfg.k_true {
        let index = rng.random_range(0..cfg.q);
        z[(index, k)] = 1.0;
        for other in 0..cfg.q {
            if other != index && libm::fabs(genotype_correlation(&genotypes, index, other)) > cfg.correlation_floor {
                z[(other, k)] = 1.0;
            }
        }
    }

    let mut rng = child(cfg.seed, Stream::Effects, 0);
    let effect = Normal::new(0.0, cfg.effect_sd).map_err(|e| Error::Argument {
        name: "effect_sd",
        reason: alloc::format!("{e}"),
    })?;
    let a = Matrix::from_fn(cfg.k_true, cfg.p, |_, _| effect.sample(&mut rng));

    let truth = PlantedTruth::new(z, a)?;
    let mut traits = truth.signal(&genotypes)?;
    if cfg.noise_sd > 0.0 {
        let mut rng = child(cfg.seed, Stream::Noise, 0);
        let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::Argument {
            name: "noise_sd",
            reason: alloc::format!("{e}"),
        })?;
        for v in traits.as_mut_slice() {
            *v += noise.sample(&mut rng);
        }
    }

    let mut data = Dataset::unlabeled(genotypes, traits)?;
    if let Some(ids) = sample_ids {
        data.sample_ids = ids;
    }
    if let Some(ids) = snp_ids {
        data.snp_ids = ids;
    }
    data.validate()?;
    Ok((data, truth))
}
