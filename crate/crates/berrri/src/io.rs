//! Tab-separated matrix and locus files.
//!
//! A matrix file has one header row (a corner cell followed by column IDs)
//! and one leading ID column. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use berrri_core::model::Locus;
use berrri_core::{Genotypes, Matrix};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file has no header row")]
    Empty { path: PathBuf },
    #[error("{path}: line {line} has {found} fields, expected {expected}")]
    Width {
        path: PathBuf,
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("{path}: cannot parse {cell:?} at row {row}, column {col}")]
    Cell {
        path: PathBuf,
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("{path}: genotype value {value:?} at row {row}, column {col} is not 0, 1 or 2")]
    Genotype {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{path}: non-finite value {value:?} at row {row}, column {col}")]
    NonFinite {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{path}: {reason}")]
    Content { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Genotype,
    Trait,
}

/// A matrix with its row and column IDs.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub matrix: Matrix,
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
}

/// Load a labelled matrix. Row and column coordinates in errors are 1-based
/// data coordinates (header and ID column excluded).
pub fn load_matrix(path: &Path, kind: MatrixKind) -> Result<Table, FormatError> {
    let text = read(path)?;
    let mut lines = data_lines(&text);
    let (_, header) = lines.next().ok_or_else(|| FormatError::Empty { path: path.into() })?;
    let col_ids: Vec<String> = header.split('\t').skip(1).map(str::to_owned).collect();
    let width = col_ids.len() + 1;
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != width {
            return Err(FormatError::Width {
                path: path.into(),
                line,
                found: fields.len(),
                expected: width,
            });
        }
        let row = row_ids.len() + 1;
        row_ids.push(fields[0].to_owned());
        for (j, cell) in fields[1..].iter().enumerate() {
            let col = j + 1;
            let cell = cell.trim();
            let v = match kind {
                MatrixKind::Genotype => match cell.parse::<i64>() {
                    Ok(v @ 0..=2) => v as f64,
                    Ok(_) => {
                        return Err(FormatError::Genotype {
                            path: path.into(),
                            row,
                            col,
                            value: cell.to_owned(),
                        })
                    }
                    Err(_) => {
                        return Err(FormatError::Cell {
                            path: path.into(),
                            row,
                            col,
                            cell: cell.to_owned(),
                        })
                    }
                },
                MatrixKind::Trait => {
                    let v = cell.parse::<f64>().map_err(|_| FormatError::Cell {
                        path: path.into(),
                        row,
                        col,
                        cell: cell.to_owned(),
                    })?;
                    if !v.is_finite() {
                        return Err(FormatError::NonFinite {
                            path: path.into(),
                            row,
                            col,
                            value: cell.to_owned(),
                        });
                    }
                    v
                }
            };
            values.push(v);
        }
    }
    let matrix = Matrix::from_vec(row_ids.len(), col_ids.len(), values).map_err(|e| FormatError::Content {
        path: path.into(),
        reason: e.to_string(),
    })?;
    log::debug!(
        "loaded {} x {} matrix from {}",
        matrix.rows(),
        matrix.cols(),
        path.display()
    );
    Ok(Table {
        row_ids,
        col_ids,
        matrix,
    })
}

/// Load a genotype file as validated dosages.
pub fn load_genotypes(path: &Path) -> Result<(Genotypes, Vec<String>, Vec<String>), FormatError> {
    let t = load_matrix(path, MatrixKind::Genotype)?;
    let values = t.matrix.as_slice().iter().map(|&v| v as u8).collect();
    let g = Genotypes::new(t.matrix.rows(), t.matrix.cols(), values).map_err(|e| FormatError::Content {
        path: path.into(),
        reason: e.to_string(),
    })?;
    Ok((g, t.row_ids, t.col_ids))
}

/// `# berrri-format <version> seed=<seed>` line carried by every output file.
pub fn format_header(seed: u64) -> String {
    format!("# berrri-format {} seed={seed}\n", crate::FORMAT_VERSION)
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_matrix(
    seed: u64,
    corner: &str,
    row_ids: &[String],
    col_ids: &[String],
    m: &Matrix,
    kind: MatrixKind,
) -> String {
    let mut out = format_header(seed);
    out.push_str(corner);
    for c in col_ids {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (r, id) in row_ids.iter().enumerate() {
        out.push_str(id);
        for &v in m.row(r) {
            out.push('\t');
            match kind {
                MatrixKind::Genotype => {
                    let _ = write!(out, "{}", v as u8);
                }
                MatrixKind::Trait => out.push_str(&fmt_f64(v)),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_matrix(
    path: &Path,
    seed: u64,
    row_ids: &[String],
    col_ids: &[String],
    m: &Matrix,
    kind: MatrixKind,
) -> Result<(), FormatError> {
    write_file(path, &render_matrix(seed, "id", row_ids, col_ids, m, kind))
}

/// Locus file: `id<TAB>chrom<TAB>position` after a header row. Returns loci
/// in the order of `ids`; every ID must be present.
pub fn load_loci(path: &Path, ids: &[String]) -> Result<Vec<Locus>, FormatError> {
    let text = read(path)?;
    let mut lines = data_lines(&text);
    lines.next().ok_or_else(|| FormatError::Empty { path: path.into() })?;
    let mut by_id = std::collections::HashMap::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != 3 {
            return Err(FormatError::Width {
                path: path.into(),
                line,
                found: fields.len(),
                expected: 3,
            });
        }
        let position = fields[2].trim().parse::<u64>().map_err(|_| FormatError::Cell {
            path: path.into(),
            row: by_id.len() + 1,
            col: 3,
            cell: fields[2].to_owned(),
        })?;
        by_id.insert(
            fields[0].to_owned(),
            Locus {
                chrom: fields[1].to_owned(),
                position,
            },
        );
    }
    ids.iter()
        .map(|id| {
            by_id.get(id).cloned().ok_or_else(|| FormatError::Content {
                path: path.into(),
                reason: format!("no locus for {id:?}"),
            })
        })
        .collect()
}
