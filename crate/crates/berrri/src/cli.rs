//! Command-line surface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use berrri_core::association::{
    baseline_permutation_fdr, significant_pairs, DEFAULT_PERMUTATIONS, DEFAULT_PRIOR_EFFECT_SD,
};
use berrri_core::eval::{
    confidence_interval, default_thresholds, holdout_split, precision_recall, rss, MAX_THRESHOLDS,
};
use berrri_core::model::Model;
use berrri_core::simgen::{simulate, GenotypeSource, SimConfig};
use berrri_core::{Dataset, Hyperparameters};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{timing_ladder, LadderConfig};
use crate::io::{fmt_f64, load_genotypes, load_loci, load_matrix, MatrixKind};
use crate::pipeline::permutation_fdr;
use crate::results::{add_fit_results, FitOutputs, Manifest, OutputSet};

pub const OUT_DIR_ENV: &str = "BERRRI_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "berrri",
    version,
    about = "Joint SNP-to-trait association mapping with a sparse latent factor regression"
)]
pub struct Cli {
    /// Output directory (created if absent).
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "berrri-out")]
    pub out_dir: PathBuf,
    /// Master random seed; every stochastic step derives its stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate genotypes and traits with a planted factor structure.
    Simulate(SimulateArgs),
    /// Fit the model and write association scores.
    Fit(FitArgs),
    /// Fit, then threshold scores by permutation FDR.
    Fdr(FdrArgs),
    /// Precision/recall and RSS of score files against a planted mask.
    Eval(EvalArgs),
    /// Time the coordinate-ascent sweep over a ladder of SNP counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HyperArgs {
    /// IBP concentration.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// ARD inverse-gamma shape.
    #[arg(long = "ard-shape", default_value_t = 1.0)]
    pub c: f64,
    /// ARD inverse-gamma scale.
    #[arg(long = "ard-scale", default_value_t = 1.0)]
    pub d: f64,
    /// Truncation level [default: min(Q, 50)].
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Convergence p-value cutoff.
    #[arg(long, default_value_t = 0.05)]
    pub p_thresh: f64,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    /// Sweeps between convergence checks.
    #[arg(long, default_value_t = 100)]
    pub check_interval: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Fit on uncentred genotypes and traits.
    #[arg(long)]
    pub no_center: bool,
}

impl HyperArgs {
    pub fn to_hyperparameters(&self, seed: u64) -> Hyperparameters {
        Hyperparameters {
            alpha: self.alpha,
            sigma2: self.sigma2,
            c: self.c,
            d: self.d,
            k_max: self.k_max,
            p_thresh: self.p_thresh,
            burn_in: self.burn_in,
            check_interval: self.check_interval,
            max_iter: self.max_iter,
            seed,
            center: !self.no_center,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Genotype matrix (samples x SNPs, dosages 0/1/2).
    #[arg(long)]
    pub genotypes: PathBuf,
    /// Trait matrix (samples x traits).
    #[arg(long)]
    pub traits: PathBuf,
    /// SNP positions (id, chrom, position); needs --trait-loci too.
    #[arg(long, requires = "trait_loci")]
    pub snp_loci: Option<PathBuf>,
    /// Trait positions (id, chrom, position); needs --snp-loci too.
    #[arg(long, requires = "snp_loci")]
    pub trait_loci: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 25)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub q: usize,
    #[arg(long, default_value_t = 5)]
    pub k_true: usize,
    #[arg(long, default_value_t = 0.5)]
    pub effect_sd: f64,
    /// Zero gives noiseless traits.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// SNPs whose |correlation| with a factor's index SNP exceeds this join the factor.
    #[arg(long, default_value_t = 0.8)]
    pub correlation_floor: f64,
    #[arg(long, default_value_t = 0.05)]
    pub maf_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub maf_max: f64,
    /// Draw rows and columns from this genotype file instead of synthesising SNPs.
    #[arg(long, conflicts_with_all = ["maf_min", "maf_max"])]
    pub genotype_source: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Also fit on a random training split and report held-out RSS.
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FdrArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Target false discovery rate.
    #[arg(long, default_value_t = 0.1)]
    pub fdr: f64,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Also threshold single-SNP Bayes factors on the same permutations.
    #[arg(long)]
    pub baseline: bool,
    /// Prior effect s.d. of the single-SNP baseline.
    #[arg(long, default_value_t = DEFAULT_PRIOR_EFFECT_SD, requires = "baseline")]
    pub prior_effect_sd: f64,
    /// Worker threads for permuted fits [default: all cores]. Does not affect results.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Planted association mask (SNPs x traits, 0/1).
    #[arg(long)]
    pub mask: PathBuf,
    /// Score matrices (SNPs x traits) from any method; larger means stronger.
    #[arg(long = "scores", required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// Observed traits, for RSS of each --fitted file.
    #[arg(long, requires = "fitted")]
    pub traits: Option<PathBuf>,
    /// Predicted traits (samples x traits).
    #[arg(long, requires = "traits", num_args = 1..)]
    pub fitted: Vec<PathBuf>,
    /// Recall at which precision is reported.
    #[arg(long, default_value_t = 0.75)]
    pub recall: f64,
    #[arg(long, default_value_t = MAX_THRESHOLDS)]
    pub max_thresholds: usize,
    /// Confidence level for intervals across score files.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Increasing SNP counts.
    #[arg(long, value_delimiter = ',', default_value = "100,200")]
    pub ladder: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 25)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
}

#[derive(Serialize)]
struct Config<'a, T: Serialize> {
    seed: u64,
    #[serde(flatten)]
    args: &'a T,
}

fn manifest<T: Serialize>(command: &str, seed: u64, args: &T) -> Result<Manifest> {
    let config = serde_json::to_value(Config { seed, args })?;
    Ok(Manifest::new(command, seed, config))
}

pub fn run(cli: Cli) -> Result<()> {
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Simulate(a) => run_simulate(a, out, cli.seed),
        Command::Fit(a) => run_fit(a, out, cli.seed),
        Command::Fdr(a) => run_fdr(a, out, cli.seed),
        Command::Eval(a) => run_eval(a, out, cli.seed),
        Command::Bench(a) => run_bench(a, out, cli.seed),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("input file {} does not exist", path.display());
    }
    Ok(())
}

pub fn load_dataset(input: &InputArgs) -> Result<Dataset> {
    require_file(&input.genotypes)?;
    require_file(&input.traits)?;
    let (g, samples, snps) = load_genotypes(&input.genotypes)?;
    let traits = load_matrix(&input.traits, MatrixKind::Trait)?;
    let data = Dataset::new(g, traits.matrix, samples, snps, traits.col_ids)?;
    if data.sample_ids != traits.row_ids {
        bail!(
            "sample IDs differ between {} and {}",
            input.genotypes.display(),
            input.traits.display()
        );
    }
    let data = match (&input.snp_loci, &input.trait_loci) {
        (Some(s), Some(t)) => {
            let snp_loci = load_loci(s, &data.snp_ids)?;
            let trait_loci = load_loci(t, &data.trait_ids)?;
            data.with_loci(Some(snp_loci), Some(trait_loci))?
        }
        _ => data,
    };
    log::info!(
        "loaded {} samples, {} SNPs, {} traits",
        data.n_samples(),
        data.n_snps(),
        data.n_traits()
    );
    Ok(data)
}

fn run_simulate(a: &SimulateArgs, out_dir: &Path, seed: u64) -> Result<()> {
    let genotypes = match &a.genotype_source {
        Some(path) => {
            require_file(path)?;
            let (g, sample_ids, snp_ids) = load_genotypes(path)?;
            GenotypeSource::External {
                genotypes: g,
                sample_ids,
                snp_ids,
            }
        }
        None => GenotypeSource::Synthetic {
            maf_min: a.maf_min,
            maf_max: a.maf_max,
        },
    };
    let cfg = SimConfig {
        n: a.n,
        p: a.p,
        q: a.q,
        k_true: a.k_true,
        effect_sd: a.effect_sd,
        noise_sd: a.noise_sd,
        correlation_floor: a.correlation_floor,
        seed,
        genotypes,
    };
    cfg.validate()?;
    let mut out = OutputSet::new(out_dir, seed)?;
    let (data, truth) = simulate(&cfg)?;
    let factor_ids: Vec<String> = (1..=truth.k_true()).map(|k| format!("factor{k}")).collect();
    out.add_matrix(
        "genotypes.tsv",
        &data.sample_ids,
        &data.snp_ids,
        &data.genotypes.to_matrix(),
        MatrixKind::Genotype,
    );
    out.add_matrix(
        "traits.tsv",
        &data.sample_ids,
        &data.trait_ids,
        &data.traits,
        MatrixKind::Trait,
    );
    out.add_matrix(
        "truth_z.tsv",
        &data.snp_ids,
        &factor_ids,
        &truth.z,
        MatrixKind::Genotype,
    );
    out.add_matrix("truth_a.tsv", &factor_ids, &data.trait_ids, &truth.a, MatrixKind::Trait);
    out.add_matrix(
        "truth_mask.tsv",
        &data.snp_ids,
        &data.trait_ids,
        &truth.mask,
        MatrixKind::Genotype,
    );
    let mut m = manifest("simulate", seed, a)?;
    m.metrics
        .insert("planted_associations".into(), (truth.mask.sum() as usize).into());
    out.finish(m)?;
    log::info!(
        "simulated {} x {} genotypes and {} traits",
        data.n_samples(),
        data.n_snps(),
        data.n_traits()
    );
    Ok(())
}

fn in_sample_fit(
    data: &Dataset,
    hp: &Hyperparameters,
) -> Result<(
    berrri_core::VariationalState,
    berrri_core::vb::FitReport,
    berrri_core::Matrix,
)> {
    let (state, report) = berrri_core::vb::fit(data, hp)?;
    let fitted = Model::new(data, hp)?.predict(&state, &data.genotypes)?;
    Ok((state, report, fitted))
}

fn run_fit(a: &FitArgs, out_dir: &Path, seed: u64) -> Result<()> {
    let hp = a.hyper.to_hyperparameters(seed);
    hp.validate()?;
    let data = load_dataset(&a.input)?;
    let mut out = OutputSet::new(out_dir, seed)?;
    let (state, report, fitted) = in_sample_fit(&data, &hp)?;
    let scores = berrri_core::association::AssociationScores {
        vmap: berrri_core::association::vmap(&state),
        threshold: None,
        estimated_fdr: None,
        fdr_target: f64::NAN,
        n_permutations: 0,
        null_scores: Vec::new(),
    };
    let mut m = manifest("fit", seed, a)?;
    add_fit_results(
        &mut out,
        &FitOutputs {
            data: &data,
            state: &state,
            report: &report,
            scores: &scores,
            fitted: &fitted,
        },
        &mut m,
        None,
    );
    m.metrics
        .insert("rss_in_sample".into(), rss(&data.traits, &fitted)?.into());
    if let Some(fraction) = a.holdout_fraction {
        let (train, test) = holdout_split(&data, fraction, seed)?;
        let (state, _, _) = in_sample_fit(&train, &hp)?;
        let predicted = Model::new(&train, &hp)?.predict(&state, &test.genotypes)?;
        out.add_matrix(
            "heldout_fitted.tsv",
            &test.sample_ids,
            &test.trait_ids,
            &predicted,
            MatrixKind::Trait,
        );
        m.metrics
            .insert("rss_heldout".into(), rss(&test.traits, &predicted)?.into());
        m.metrics.insert("heldout_samples".into(), test.n_samples().into());
    }
    out.finish(m)?;
    if !report.converged {
        log::warn!("fit did not converge within {} iterations", report.iterations);
    }
    Ok(())
}

fn run_fdr(a: &FdrArgs, out_dir: &Path, seed: u64) -> Result<()> {
    let hp = a.hyper.to_hyperparameters(seed);
    hp.validate()?;
    let data = load_dataset(&a.input)?;
    let mut out = OutputSet::new(out_dir, seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    let run = pool.install(|| permutation_fdr(&data, &hp, a.fdr, a.permutations))?;
    let fitted = Model::new(&data, &hp)?.predict(&run.state, &data.genotypes)?;
    let mut m = manifest("fdr", seed, a)?;
    let converged = run.null_reports.iter().filter(|r| r.converged).count();
    add_fit_results(
        &mut out,
        &FitOutputs {
            data: &data,
            state: &run.state,
            report: &run.report,
            scores: &run.scores,
            fitted: &fitted,
        },
        &mut m,
        Some(converged),
    );
    let mut null = String::new();
    for (i, s) in run.scores.null_scores.iter().enumerate() {
        let _ = writeln!(null, "{}\t{}", i / (data.n_snps() * data.n_traits()), fmt_f64(*s));
    }
    out.add_table("null_scores.tsv", &["permutation", "abs"], &null);
    if a.baseline {
        let (bf, cut) = baseline_permutation_fdr(&data, &hp, a.fdr, a.permutations, a.prior_effect_sd)?;
        out.add_table(
            "baseline.tsv",
            &crate::results::VMAP_COLUMNS[..2]
                .iter()
                .copied()
                .chain(["log10_bf", "significant"])
                .collect::<Vec<_>>(),
            &baseline_table(&data, &bf, cut.map(|c| c.threshold)),
        );
        m.metrics.insert(
            "baseline_discoveries".into(),
            significant_pairs(&bf, cut.map(|c| c.threshold)).len().into(),
        );
        m.metrics.insert(
            "baseline_threshold".into(),
            serde_json::to_value(cut.map(|c| c.threshold))?,
        );
    }
    let discoveries = run.scores.discoveries().len();
    out.finish(m)?;
    log::info!("{discoveries} discoveries at FDR {}", a.fdr);
    Ok(())
}

fn baseline_table(data: &Dataset, bf: &berrri_core::Matrix, threshold: Option<f64>) -> String {
    let mut body = String::new();
    for q in 0..bf.rows() {
        for p in 0..bf.cols() {
            let v = bf[(q, p)];
            let _ = writeln!(
                body,
                "{}\t{}\t{}\t{}",
                data.snp_ids[q],
                data.trait_ids[p],
                if v.is_finite() { fmt_f64(v) } else { "NA".to_owned() },
                threshold.is_some_and(|t| v >= t) as u8
            );
        }
    }
    body
}

fn run_eval(a: &EvalArgs, out_dir: &Path, seed: u64) -> Result<()> {
    require_file(&a.mask)?;
    let mask = load_matrix(&a.mask, MatrixKind::Trait)?;
    let mut scores = Vec::with_capacity(a.scores.len());
    for path in &a.scores {
        require_file(path)?;
        let s = load_matrix(path, MatrixKind::Trait)?;
        if s.row_ids != mask.row_ids || s.col_ids != mask.col_ids {
            bail!("{} is not labelled like {}", path.display(), a.mask.display());
        }
        scores.push(s);
    }
    let mut rss_values = Vec::new();
    if let Some(traits) = &a.traits {
        require_file(traits)?;
        let y = load_matrix(traits, MatrixKind::Trait)?;
        for path in &a.fitted {
            require_file(path)?;
            let f = load_matrix(path, MatrixKind::Trait)?;
            rss_values.push(rss(&y.matrix, &f.matrix).with_context(|| format!("comparing {}", path.display()))?);
        }
    }

    let mut out = OutputSet::new(out_dir, seed)?;
    let mut curves = String::new();
    let mut metrics = String::new();
    let (mut aucs, mut precisions) = (Vec::new(), Vec::new());
    for (i, (path, s)) in a.scores.iter().zip(&scores).enumerate() {
        let thresholds = default_thresholds(&s.matrix, a.max_thresholds);
        let curve = precision_recall(&s.matrix, &mask.matrix, &thresholds)?;
        for pt in &curve.points {
            let _ = writeln!(
                curves,
                "{}\t{}\t{}\t{}",
                i + 1,
                fmt_f64(pt.threshold),
                fmt_f64(pt.precision),
                fmt_f64(pt.recall)
            );
        }
        let prec = curve.precision_at_recall(a.recall);
        let _ = writeln!(
            metrics,
            "{}\t{}\t{}\t{}",
            i + 1,
            path.display(),
            fmt_f64(curve.auc),
            prec.map_or_else(|| "NA".to_owned(), fmt_f64)
        );
        aucs.push(curve.auc);
        precisions.extend(prec);
    }
    out.add_table(
        "pr_curves.tsv",
        &["method", "threshold", "precision", "recall"],
        &curves,
    );
    out.add_table(
        "metrics.tsv",
        &["method", "scores", "auc", "precision_at_recall"],
        &metrics,
    );

    let mut summary = String::new();
    let mut summarize = |name: &str, values: &[f64]| {
        if let Ok((lo, hi)) = confidence_interval(values, a.level) {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let _ = writeln!(
                summary,
                "{name}\t{}\t{}\t{}\t{}",
                values.len(),
                fmt_f64(mean),
                fmt_f64(lo),
                fmt_f64(hi)
            );
        }
    };
    summarize("auc", &aucs);
    summarize("precision_at_recall", &precisions);
    summarize("rss", &rss_values);
    out.add_table("summary.tsv", &["metric", "n", "mean", "ci_low", "ci_high"], &summary);

    let mut m = manifest("eval", seed, a)?;
    m.metrics.insert("rss".into(), serde_json::to_value(&rss_values)?);
    m.metrics.insert("auc".into(), serde_json::to_value(&aucs)?);
    out.finish(m)?;
    Ok(())
}

fn run_bench(a: &BenchArgs, out_dir: &Path, seed: u64) -> Result<()> {
    if a.ladder.is_empty() || a.ladder.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--ladder must be a non-empty increasing list");
    }
    let cfg = LadderConfig {
        ladder: a.ladder.clone(),
        n: a.n,
        p: a.p,
        k_max: a.k_max,
        repetitions: a.repetitions,
        sweeps: a.sweeps,
        seed,
    };
    let mut out = OutputSet::new(out_dir, seed)?;
    let rows = timing_ladder(&cfg)?;
    let mut body = String::new();
    for r in &rows {
        let _ = writeln!(
            body,
            "{}\t{:.6e}\t{:.6e}\t{:.6e}",
            r.q, r.mean_seconds, r.sd_seconds, r.sweep_seconds
        );
    }
    // Timings are the only non-reproducible output; they stay out of the manifest.
    out.add_table(
        "timing.tsv",
        &["q", "mean_seconds", "sd_seconds", "sweep_seconds"],
        &body,
    );
    out.finish(manifest("bench", seed, a)?)?;
    Ok(())
}

/// Broad error category for the one-line error report.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(fe) = e.downcast_ref::<crate::io::FormatError>() {
        return match fe {
            crate::io::FormatError::Io { .. } => "io",
            _ => "format",
        };
    }
    if let Some(ce) = e.downcast_ref::<berrri_core::Error>() {
        return match ce {
            berrri_core::Error::Numerical { .. } => "numerical",
            _ => "invalid_input",
        };
    }
    "error"
}

/// Single-line, JSON-encoded error report.
pub fn error_line(e: &anyhow::Error) -> String {
    let message = format!("{e:#}").replace('\n', " ");
    serde_json::json!({ "error": error_kind(e), "message": message }).to_string()
}
