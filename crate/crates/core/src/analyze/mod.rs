//! Interpretability and profile reports: elastic-net coefficient matrices,
//! top/bottom membrane profiles and scaffold landscapes.

pub mod importance;
pub mod profiles;
pub mod scaffolds;
pub(crate) mod svg;

use thiserror::Error;

pub use importance::{feature_importance, importance_from_selection, read_importance_csv, ImportanceMatrix};
pub use profiles::{
    quartiles, top_bottom_profiles, MembraneProfile, Overlap, ProfileReport, PropertySummary, PropertyTable,
    TrendCheck,
};
pub use scaffolds::{scaffold_report, ScaffoldAssignment, ScaffoldReport, ACYCLIC};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("fitting {target} on fold {fold} failed: {message}")]
    Fit { target: String, fold: u8, message: String },
    #[error("malformed importance table: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
