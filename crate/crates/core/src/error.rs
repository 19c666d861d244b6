use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },
    #[error("row count mismatch: genotypes have {genotype_rows} rows, traits have {trait_rows}")]
    RowMismatch { genotype_rows: usize, trait_rows: usize },
    #[error("genotype value {value} at row {row}, column {col} is not in {{0,1,2}}")]
    Genotype { row: usize, col: usize, value: i64 },
    #[error("non-finite trait value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid hyperparameter {name}: {reason}")]
    Hyperparameter { name: &'static str, reason: String },
    #[error("invalid argument {name}: {reason}")]
    Argument { name: &'static str, reason: String },
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },
    #[error("genotype source too small: need {required_rows}x{required_cols}, have {available_rows}x{available_cols}")]
    GenotypeSourceTooSmall {
        required_rows: usize,
        required_cols: usize,
        available_rows: usize,
        available_cols: usize,
    },
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: (usize, usize), actual: (usize, usize)) -> Self {
        use alloc::format;
        Error::Shape {
            context,
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }
}
