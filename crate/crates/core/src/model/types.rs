use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::DEFAULT_K_CAP;

/// Minor-allele dosages, N individuals x Q SNPs, every entry in `{0, 1, 2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genotypes {
    rows: usize,
    cols: usize,
    values: Vec<u8>,
}

impl Genotypes {
    pub fn new(rows: usize, cols: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Argument {
                name: "values",
                reason: format!("{} values for a {}x{} genotype matrix", values.len(), rows, cols),
            });
        }
        if let Some(i) = values.iter().position(|&v| v > 2) {
            return Err(Error::Genotype {
                row: i / cols,
                col: i % cols,
                value: values[i] as i64,
            });
        }
        Ok(Genotypes { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.values[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.values
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) as f64)
    }

    /// Sub-matrix on the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Genotypes {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                values.push(self.get(r, c));
            }
        }
        Genotypes {
            rows: rows.len(),
            cols: cols.len(),
            values,
        }
    }
}

/// Genomic coordinate used for SNP-trait distance reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Locus {
    pub chrom: String,
    pub position: u64,
}

impl Locus {
    pub fn distance(&self, other: &Locus) -> Option<u64> {
        (self.chrom == other.chrom).then(|| self.position.abs_diff(other.position))
    }
}

/// Paired genotype and trait matrices with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub genotypes: Genotypes,
    pub traits: Matrix,
    pub sample_ids: Vec<String>,
    pub snp_ids: Vec<String>,
    pub trait_ids: Vec<String>,
    pub snp_loci: Option<Vec<Locus>>,
    pub trait_loci: Option<Vec<Locus>>,
}

impl Dataset {
    pub fn new(
        genotypes: Genotypes,
        traits: Matrix,
        sample_ids: Vec<String>,
        snp_ids: Vec<String>,
        trait_ids: Vec<String>,
    ) -> Result<Self> {
        let data = Dataset {
            genotypes,
            traits,
            sample_ids,
            snp_ids,
            trait_ids,
            snp_loci: None,
            trait_loci: None,
        };
        data.validate()?;
        Ok(data)
    }

    /// Dataset with generated labels (`ind1..`, `snp1..`, `trait1..`).
    pub fn unlabeled(genotypes: Genotypes, traits: Matrix) -> Result<Self> {
        let ids = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect();
        let sample_ids = ids("ind", genotypes.rows());
        let snp_ids = ids("snp", genotypes.cols());
        let trait_ids = ids("trait", traits.cols());
        Self::new(genotypes, traits, sample_ids, snp_ids, trait_ids)
    }

    pub fn with_loci(mut self, snp_loci: Option<Vec<Locus>>, trait_loci: Option<Vec<Locus>>) -> Result<Self> {
        self.snp_loci = snp_loci;
        self.trait_loci = trait_loci;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.genotypes.rows() != self.traits.rows() {
            return Err(Error::RowMismatch {
                genotype_rows: self.genotypes.rows(),
                trait_rows: self.traits.rows(),
            });
        }
        for r in 0..self.traits.rows() {
            if let Some(c) = self.traits.row(r).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
        let check = |name: &'static str, labels: usize, expected: usize| {
            if labels == expected {
                Ok(())
            } else {
                Err(Error::Argument {
                    name,
                    reason: format!("{labels} labels for {expected} entries"),
                })
            }
        };
        check("sample_ids", self.sample_ids.len(), self.genotypes.rows())?;
        check("snp_ids", self.snp_ids.len(), self.genotypes.cols())?;
        check("trait_ids", self.trait_ids.len(), self.traits.cols())?;
        if let Some(loci) = &self.snp_loci {
            check("snp_loci", loci.len(), self.genotypes.cols())?;
        }
        if let Some(loci) = &self.trait_loci {
            check("trait_loci", loci.len(), self.traits.cols())?;
        }
        Ok(())
    }

    /// Subset of samples, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let cols: Vec<usize> = (0..self.genotypes.cols()).collect();
        Dataset {
            genotypes: self.genotypes.select(rows, &cols),
            traits: Matrix::from_fn(rows.len(), self.traits.cols(), |r, c| self.traits[(rows[r], c)]),
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            snp_ids: self.snp_ids.clone(),
            trait_ids: self.trait_ids.clone(),
            snp_loci: self.snp_loci.clone(),
            trait_loci: self.trait_loci.clone(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.genotypes.rows()
    }

    pub fn n_snps(&self) -> usize {
        self.genotypes.cols()
    }

    pub fn n_traits(&self) -> usize {
        self.traits.cols()
    }
}

/// Fixed hyperparameters and run controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// IBP concentration.
    pub alpha: f64,
    /// Shared noise variance.
    pub sigma2: f64,
    /// Inverse-gamma shape of the ARD prior.
    pub c: f64,
    /// Inverse-gamma scale of the ARD prior.
    pub d: f64,
    /// Truncation level; `None` means `min(Q, 50)`.
    pub k_max: Option<usize>,
    pub p_thresh: f64,
    pub burn_in: usize,
    pub check_interval: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Column-centre X and Y before fitting (absorbs per-trait intercepts).
    pub center: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 1.0,
            sigma2: 1.0,
            c: 1.0,
            d: 1.0,
            k_max: None,
            p_thresh: 0.05,
            burn_in: 100,
            check_interval: 100,
            max_iter: 1000,
            seed: 0,
            center: true,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Hyperparameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        positive("alpha", self.alpha)?;
        positive("sigma2", self.sigma2)?;
        positive("c", self.c)?;
        positive("d", self.d)?;
        if self.k_max == Some(0) {
            return Err(Error::Hyperparameter {
                name: "k_max",
                reason: "must be >= 1".to_string(),
            });
        }
        if !(self.p_thresh > 0.0 && self.p_thresh < 1.0) {
            return Err(Error::Hyperparameter {
                name: "p_thresh",
                reason: format!("must lie in (0, 1), got {}", self.p_thresh),
            });
        }
        if self.burn_in >= self.max_iter {
            return Err(Error::Hyperparameter {
                name: "burn_in",
                reason: format!("burn_in {} must be < max_iter {}", self.burn_in, self.max_iter),
            });
        }
        if self.check_interval == 0 {
            return Err(Error::Hyperparameter {
                name: "check_interval",
                reason: "must be >= 1".to_string(),
            });
        }
        Ok(())
    }

    /// Resolved truncation level for `q` SNPs.
    pub fn truncation(&self, q: usize) -> usize {
        self.k_max.unwrap_or_else(|| q.clamp(1, DEFAULT_K_CAP))
    }
}

/// Mean-field variational parameters.
///
/// The covariance of each loading row `A[k,.]` is diagonal at the optimum
/// (traits decouple given the factor's genotype score), so `varphi[k,p]`
/// holds the variance of `A[k,p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    /// K x 2 Beta parameters of the stick weights.
    pub lambda: Matrix,
    /// Q x K Bernoulli means of Z.
    pub eta: Matrix,
    /// K x P Gaussian means of A.
    pub phi: Matrix,
    /// K x P Gaussian variances of A.
    pub varphi: Matrix,
    /// K x P inverse-gamma shapes of delta.
    pub kappa_shape: Matrix,
    /// K x P inverse-gamma scales of delta.
    pub kappa_scale: Matrix,
    pub iteration: usize,
}

impl VariationalState {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.eta.rows(), self.eta.cols(), self.phi.cols())
    }

    pub fn check_invariants(&self) -> Result<()> {
        let (q, k, p) = self.dims();
        let shapes = [
            ("lambda", self.lambda.shape(), (k, 2)),
            ("phi", self.phi.shape(), (k, p)),
            ("varphi", self.varphi.shape(), (k, p)),
            ("kappa_shape", self.kappa_shape.shape(), (k, p)),
            ("kappa_scale", self.kappa_scale.shape(), (k, p)),
            ("eta", self.eta.shape(), (q, k)),
        ];
        for (name, actual, expected) in shapes {
            if actual != expected {
                return Err(Error::shape(name, expected, actual));
            }
        }
        if self.eta.as_slice().iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(Error::numerical("eta", "entry outside [0, 1]"));
        }
        let strictly_positive = |m: &Matrix| m.as_slice().iter().all(|&v| v > 0.0 && v.is_finite());
        if !strictly_positive(&self.lambda) {
            return Err(Error::numerical("lambda", "non-positive entry"));
        }
        if !strictly_positive(&self.kappa_shape) || !strictly_positive(&self.kappa_scale) {
            return Err(Error::numerical("kappa", "non-positive entry"));
        }
        if !strictly_positive(&self.varphi) {
            return Err(Error::numerical("varphi", "covariance not positive definite"));
        }
        if !self.phi.is_finite() {
            return Err(Error::numerical("phi", "non-finite entry"));
        }
        Ok(())
    }

    /// Relabel factors: new factor `i` is old factor `perm[i]`.
    pub fn permute_factors(&self, perm: &[usize]) -> VariationalState {
        let rows = |m: &Matrix| Matrix::from_fn(m.rows(), m.cols(), |r, c| m[(perm[r], c)]);
        VariationalState {
            lambda: rows(&self.lambda),
            eta: Matrix::from_fn(self.eta.rows(), self.eta.cols(), |r, c| self.eta[(r, perm[c])]),
            phi: rows(&self.phi),
            varphi: rows(&self.varphi),
            kappa_shape: rows(&self.kappa_shape),
            kappa_scale: rows(&self.kappa_scale),
            iteration: self.iteration,
        }
    }

    /// Factors whose largest inclusion probability exceeds one half.
    pub fn active_factors(&self) -> Vec<usize> {
        (0..self.eta.cols())
            .filter(|&k| (0..self.eta.rows()).any(|q| self.eta[(q, k)] > 0.5))
            .collect()
    }

    pub fn effective_k(&self) -> usize {
        self.active_factors().len()
    }
}

/// Simulation ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    /// Q x K_true inclusion indicators (0/1).
    pub z: Matrix,
    /// K_true x P effects.
    pub a: Matrix,
    /// Q x P association mask (0/1): `mask[q,p] = 1` iff some factor
    /// includes `q` and has a non-zero effect on `p`.
    pub mask: Matrix,
}

impl PlantedTruth {
    pub fn new(z: Matrix, a: Matrix) -> Result<Self> {
        if z.cols() != a.rows() || z.cols() == 0 {
            return Err(Error::shape("planted truth", (z.cols(), a.cols()), a.shape()));
        }
        if z.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Argument {
                name: "z",
                reason: "inclusion matrix must be binary".to_string(),
            });
        }
        let mask = Matrix::from_fn(z.rows(), a.cols(), |q, p| {
            let hit = (0..z.cols()).any(|k| z[(q, k)] == 1.0 && a[(k, p)] != 0.0);
            if hit {
                1.0
            } else {
                0.0
            }
        });
        Ok(PlantedTruth { z, a, mask })
    }

    pub fn k_true(&self) -> usize {
        self.z.cols()
    }

    /// Noiseless signal `X Z A`.
    pub fn signal(&self, genotypes: &Genotypes) -> Result<Matrix> {
        genotypes.to_matrix().matmul(&self.z)?.matmul(&self.a)
    }
}
