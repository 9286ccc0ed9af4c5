//! TLC dataset ingestion, splits, metrics and the skeleton descriptor.

pub mod metrics;
pub mod msd;
pub mod schema;
mod split;
mod table;

use std::path::Path;

use thiserror::Error;

pub use metrics::{r_squared, rmse, spearman, MetricError};
pub use msd::{msd_value, SubstitutionPattern};
pub use split::{split, split_sizes, SplitIndices, MIN_SPLIT_ROWS};
pub use table::{load_csv, read_tlc, DataTable, LoadReport, SOLVENT_SUM_TOLERANCE};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: non-numeric value `{value}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column `{column}`: value {value} out of range ({reason})")]
    OutOfRange {
        row: usize,
        column: String,
        value: f64,
        reason: &'static str,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least {min} rows to split, got {rows}")]
    TooFewRows { rows: usize, min: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io {
            path: String::from("<stream>"),
            source: e,
        }
    }
}

/// Default clamp for [`logit`].
pub const LOGIT_EPS: f64 = 1e-3;

/// `ln(y / (1 - y))` with `y` clamped to `[eps, 1 - eps]`.
pub fn logit(y: f64, eps: f64) -> f64 {
    let y = y.clamp(eps, 1.0 - eps);
    (y / (1.0 - y)).ln()
}

pub fn logit_all(y: &[f64], eps: f64) -> Vec<f64> {
    y.iter().map(|&v| logit(v, eps)).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
