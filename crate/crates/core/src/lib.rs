//! Multitask QSPR workbench for PAMPA membrane permeability.

pub mod analyze;
pub mod assay;
pub mod chem;
pub mod cli;
pub mod data;
pub mod design;
mod linalg;
pub mod models;
pub mod pca;
pub mod tuning;
