//! Result tables and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use berrri_core::association::AssociationScores;
use berrri_core::vb::FitReport;
use berrri_core::{Dataset, Matrix, VariationalState};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, format_header, render_matrix, write_file, FormatError, MatrixKind};

pub const MANIFEST: &str = "manifest.json";

/// Create `dir` if needed and prove it is writable before anything else is
/// written into it.
pub fn prepare_out_dir(dir: &Path) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let probe = dir.join(".berrri-write-probe");
    fs::write(&probe, b"").map_err(io)?;
    fs::remove_file(&probe).map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub iteration: usize,
    pub p_values: [f64; 5],
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub converged: bool,
    pub iterations: usize,
    pub truncation: usize,
    pub effective_k: usize,
    pub final_elbo: f64,
    /// Block order: lambda, eta, phi, varphi, kappa.
    pub p_values: Option<[f64; 5]>,
    pub checks: Vec<CheckSummary>,
    pub elbo_trace: Vec<f64>,
}

impl From<&FitReport> for FitSummary {
    fn from(r: &FitReport) -> Self {
        FitSummary {
            converged: r.converged,
            iterations: r.iterations,
            truncation: r.truncation,
            effective_k: r.effective_k,
            final_elbo: r.final_elbo,
            p_values: r.p_values,
            checks: r
                .checks
                .iter()
                .map(|c| CheckSummary {
                    iteration: c.iteration,
                    p_values: c.p_values,
                    converged: c.converged,
                })
                .collect(),
            elbo_trace: r.elbo_trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrSummary {
    pub fdr_target: f64,
    pub n_permutations: usize,
    pub threshold: Option<f64>,
    pub estimated_fdr: Option<f64>,
    pub discoveries: usize,
    pub permutations_converged: usize,
}

/// Everything needed to reproduce a run, plus its headline outcomes.
/// Wall-clock times are never recorded here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr: Option<FdrSummary>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            format_version: crate::FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed,
            config,
            files: Vec::new(),
            fit: None,
            fdr: None,
            metrics: serde_json::Map::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Manifest, FormatError> {
        let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| FormatError::Content {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Collects rendered files and writes them together once all of them
/// rendered successfully.
pub struct OutputSet {
    dir: PathBuf,
    seed: u64,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: &Path, seed: u64) -> Result<Self, FormatError> {
        prepare_out_dir(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            seed,
            files: Vec::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_owned(), contents));
    }

    /// Header line plus a tab-separated table.
    pub fn add_table(&mut self, name: &str, columns: &[&str], body: &str) {
        let mut s = format_header(self.seed);
        s.push_str(&columns.join("\t"));
        s.push('\n');
        s.push_str(body);
        self.add(name, s);
    }

    pub fn add_matrix(&mut self, name: &str, row_ids: &[String], col_ids: &[String], m: &Matrix, kind: MatrixKind) {
        self.add(name, render_matrix(self.seed, "id", row_ids, col_ids, m, kind));
    }

    /// Write every file, then the manifest listing them.
    pub fn finish(self, mut manifest: Manifest) -> Result<Vec<PathBuf>, FormatError> {
        manifest.files = self.files.iter().map(|(n, _)| n.clone()).collect();
        let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| FormatError::Content {
            path: self.dir.join(MANIFEST),
            reason: e.to_string(),
        })?;
        json.push('\n');
        let mut written = Vec::new();
        for (name, contents) in self.files.iter().chain(std::iter::once(&(MANIFEST.to_owned(), json))) {
            let path = self.dir.join(name);
            write_file(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn distance(data: &Dataset, q: usize, p: usize) -> Option<u64> {
    let s = data.snp_loci.as_ref()?;
    let t = data.trait_loci.as_ref()?;
    s[q].distance(&t[p])
}

/// Long-format association table: one row per SNP-trait pair.
pub fn vmap_table(data: &Dataset, signed: &Matrix, threshold: Option<f64>) -> String {
    let mut body = String::new();
    for q in 0..signed.rows() {
        for p in 0..signed.cols() {
            let s = signed[(q, p)];
            let significant = threshold.is_some_and(|t| s.abs() >= t);
            let dist = distance(data, q, p).map_or_else(|| "NA".to_owned(), |d| d.to_string());
            let _ = writeln!(
                body,
                "{}\t{}\t{}\t{}\t{}\t{}",
                data.snp_ids[q],
                data.trait_ids[p],
                fmt_f64(s),
                fmt_f64(s.abs()),
                significant as u8,
                dist
            );
        }
    }
    body
}

pub const VMAP_COLUMNS: [&str; 6] = ["snp_id", "trait_id", "signed", "abs", "significant", "distance"];

/// Fitted model artefacts for the `fit` and `fdr` commands.
pub struct FitOutputs<'a> {
    pub data: &'a Dataset,
    pub state: &'a VariationalState,
    pub report: &'a FitReport,
    pub scores: &'a AssociationScores,
    pub fitted: &'a Matrix,
}

/// Add the standard result tables and fill the manifest's fit and FDR
/// sections.
pub fn add_fit_results(out: &mut OutputSet, r: &FitOutputs, manifest: &mut Manifest, null_converged: Option<usize>) {
    let threshold = r.scores.threshold;
    out.add_table(
        "vmap.tsv",
        &VMAP_COLUMNS,
        &vmap_table(r.data, &r.scores.vmap.signed, threshold),
    );
    out.add_matrix(
        "vmap_matrix.tsv",
        &r.data.snp_ids,
        &r.data.trait_ids,
        &r.scores.vmap.magnitude,
        MatrixKind::Trait,
    );

    let mut factors = String::new();
    for q in 0..r.state.eta.rows() {
        for k in 0..r.state.eta.cols() {
            let _ = writeln!(
                factors,
                "{}\t{}\t{}",
                r.data.snp_ids[q],
                k + 1,
                fmt_f64(r.state.eta[(q, k)])
            );
        }
    }
    out.add_table("factors.tsv", &["snp_id", "k", "eta"], &factors);

    let mut loadings = String::new();
    for k in 0..r.state.phi.rows() {
        for p in 0..r.state.phi.cols() {
            let _ = writeln!(
                loadings,
                "{}\t{}\t{}\t{}",
                k + 1,
                r.data.trait_ids[p],
                fmt_f64(r.state.phi[(k, p)]),
                fmt_f64(r.state.varphi[(k, p)])
            );
        }
    }
    out.add_table("loadings.tsv", &["k", "trait_id", "phi", "varphi"], &loadings);
    out.add_matrix(
        "fitted.tsv",
        &r.data.sample_ids,
        &r.data.trait_ids,
        r.fitted,
        MatrixKind::Trait,
    );

    manifest.fit = Some(FitSummary::from(r.report));
    manifest.fdr = null_converged.map(|converged| FdrSummary {
        fdr_target: r.scores.fdr_target,
        n_permutations: r.scores.n_permutations,
        threshold,
        estimated_fdr: r.scores.estimated_fdr,
        discoveries: r.scores.discoveries().len(),
        permutations_converged: converged,
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_rejects_unwritable_target() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        assert!(prepare_out_dir(&file.join("sub")).is_err());
        assert!(prepare_out_dir(&dir.path().join("new/nested")).is_ok());
    }

    #[test]
    fn manifest_round_trips() {
        let mut m = Manifest::new("fit", 3, serde_json::json!({"alpha": 1.0}));
        m.metrics.insert("rss".into(), serde_json::json!(2.5));
        let dir = tempfile::tempdir().unwrap();
        let out = OutputSet::new(dir.path(), 3).unwrap();
        out.finish(m.clone()).unwrap();
        assert_eq!(Manifest::load(&dir.path().join(MANIFEST)).unwrap(), m);
    }
}
