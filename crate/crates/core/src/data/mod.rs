//! Tabular inputs: plate measurements, descriptor tables, fold assignments,
//! normalization and synthetic datasets.

mod descriptors;
mod folds;
mod measurements;
mod normalize;
mod percepta;
mod synth;

use std::path::PathBuf;
use thiserror::Error;

pub use descriptors::{
    expected_dimension, load_descriptors, read_descriptors, write_descriptors, DescriptorTable, ModelData,
    ECFP_WIDTH,
};
pub use folds::{split_folds, FoldAssignment, N_FOLDS, TEST_FOLD};
pub use measurements::{
    load_concentrations, load_measurements, read_concentrations, read_measurements, write_mean_logpe,
    write_measurements, ConcentrationRow, MeanLogPe, Measure, MeasurementTable, Membrane, MembraneValues,
    PlateRecord,
};
pub use normalize::{standardize, NormalizationStats};
pub use percepta::{load_raw_table, preprocess_percepta, PerceptaReport, RawTable, PERCEPTA_DESCRIPTORS};
pub use synth::{synth_dataset, SynthDataset};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    Schema { missing: Vec<String>, extra: Vec<String> },
    #[error("row {row}, column {column:?}: cannot parse {value:?}")]
    Parse { row: usize, column: String, value: String },
    #[error("duplicate compound id {0:?}")]
    DuplicateId(String),
    #[error("column {0:?} has zero variance")]
    ZeroVariance(String),
    #[error("need at least {needed} compounds, got {got}")]
    TooFewCompounds { needed: usize, got: usize },
    #[error("fold label {fold} for {id:?} is outside 0..5")]
    BadFold { id: String, fold: i64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid normalization file: {0}")]
    Normalization(String),
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn open_file(path: &std::path::Path) -> Result<std::fs::File, DataError> {
    std::fs::File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Lowercase alphanumeric projection used to match header spellings.
pub(crate) fn normalize_name(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

/// Blank, `nan` and `NA`-style cells are missing.
pub(crate) fn parse_cell(raw: &str) -> Result<Option<f64>, ()> {
    let t = raw.trim();
    if t.is_empty() || matches!(t.to_ascii_lowercase().as_str(), "nan" | "na" | "n/a" | "null" | "none" | "-") {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_nan() => Ok(None),
        Ok(v) => Ok(Some(v)),
        Err(_) => Err(()),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}
