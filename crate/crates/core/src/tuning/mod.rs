//! Evaluation protocol: fold 0 held out as external test, 4-fold CV grid
//! search over folds 1–4, tuned-model selection and test evaluation.

pub mod grids;
pub mod metrics;
pub mod report;
pub mod select;
pub mod sweep;

use thiserror::Error;

use crate::models::ModelClass;

pub use crate::data::split_folds;
pub use grids::{parse_gamma, parse_kernel, GridConfig};
pub use metrics::{mean_std, metric_corr, metric_r2, metric_rmse, MetricError, Metrics};
pub use report::{
    mean_std_cell, write_pairs_csv, write_runs_csv, write_selection_csv, write_test_runs_csv, write_trials_csv,
};
pub use select::{
    compare_single_vs_multi, evaluate_test, select_tuned, PairRow, PairingTable, SelectionEntry, SelectionReport,
    TestRun,
};
pub use sweep::{
    run_grid, with_workers, CvPlan, LeakageAudit, MetricSummary, RunMetrics, SweepOutcome, SweepSpec, TaskMode,
    TrialResult,
};

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no grid points for {0}")]
    EmptyGrid(ModelClass),
    #[error("{0} does not support {1:?} mode")]
    UnsupportedMode(ModelClass, TaskMode),
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("every trial failed: {0}")]
    AllTrialsFailed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
