//! Cross-validated grid sweeps: fold 0 is held out, folds 1–4 rotate as
//! validation, each grid point is refit per fold and repeat.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean_std, Metrics};
use super::TuningError;
use crate::data::{ModelData, TEST_FOLD};
use crate::models::{derive_seed, ModelClass, ModelParams, RegressorSpec, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    Single,
    Multi,
}

impl TaskMode {
    pub fn label(self) -> &'static str {
        match self {
            TaskMode::Single => "single",
            TaskMode::Multi => "multi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub cv_folds: Vec<u8>,
    pub test_fold: u8,
    pub seed: u64,
    /// Per-class overrides of the repeat count.
    #[serde(default)]
    pub repeats: BTreeMap<ModelClass, usize>,
}

impl CvPlan {
    pub fn new(seed: u64) -> CvPlan {
        CvPlan { cv_folds: vec![1, 2, 3, 4], test_fold: TEST_FOLD, seed, repeats: BTreeMap::new() }
    }

    /// MLP 5, RFR 3, otherwise 1, unless overridden.
    pub fn repeats_for(&self, class: ModelClass) -> usize {
        self.repeats.get(&class).copied().unwrap_or(match class {
            ModelClass::Mlp => 5,
            ModelClass::Rfr => 3,
            _ => 1,
        })
    }

    pub fn training_folds(&self, validation: u8) -> Vec<u8> {
        self.cv_folds.iter().copied().filter(|&f| f != validation).collect()
    }

    pub fn trial_seed(&self, grid_index: usize, fold: u8, repeat: usize) -> u64 {
        derive_seed(self.seed, &[grid_index as u64, fold as u64, repeat as u64])
    }

    /// Smallest training-split size, the bound used to clip PLS grids.
    pub fn min_training_rows(&self, data: &ModelData) -> usize {
        self.cv_folds.iter().map(|&v| data.rows_in_folds(&self.training_folds(v)).len()).min().unwrap_or(0)
    }

    pub fn check(&self, data: &ModelData) -> Result<(), TuningError> {
        if self.cv_folds.contains(&self.test_fold) {
            return Err(TuningError::Config(format!("test fold {} listed as a CV fold", self.test_fold)));
        }
        if self.cv_folds.len() < 2 {
            return Err(TuningError::Config("need at least two CV folds".into()));
        }
        for &f in &self.cv_folds {
            if data.rows_in_folds(&[f]).is_empty() {
                return Err(TuningError::Config(format!("CV fold {f} has no compounds")));
            }
        }
        Ok(())
    }
}

/// One model class swept over a grid for a set of targets. In single mode
/// each target gets its own sweep; in multi mode the targets are fit jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub class: ModelClass,
    pub mode: TaskMode,
    pub targets: Vec<String>,
    pub grid: Vec<ModelParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub fold: u8,
    pub repeat: usize,
    pub seed: u64,
    pub train: Metrics,
    pub valid: Metrics,
}

/// Mean and sample std of each metric over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub corr: (f64, f64),
    pub r2: (f64, f64),
    pub rmse: (f64, f64),
}

impl MetricSummary {
    pub fn from_metrics<'a>(items: impl Iterator<Item = &'a Metrics> + Clone) -> MetricSummary {
        let col = |f: fn(&Metrics) -> f64| mean_std(&items.clone().map(f).collect::<Vec<_>>());
        MetricSummary { corr: col(|m| m.corr), r2: col(|m| m.r2), rmse: col(|m| m.rmse) }
    }
}

/// Outcome of one grid point for one scored target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub representation: String,
    pub class: ModelClass,
    pub mode: TaskMode,
    /// Targets the model was trained on (one in single mode).
    pub group: Vec<String>,
    /// Target these metrics refer to.
    pub target: String,
    pub grid_index: usize,
    pub params: ModelParams,
    pub runs: Vec<RunMetrics>,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && !self.runs.is_empty()
    }

    pub fn train_summary(&self) -> MetricSummary {
        MetricSummary::from_metrics(self.runs.iter().map(|r| &r.train))
    }

    pub fn valid_summary(&self) -> MetricSummary {
        MetricSummary::from_metrics(self.runs.iter().map(|r| &r.valid))
    }

    /// Mean validation R²; `None` for failed trials or undefined scores.
    pub fn score(&self) -> Option<f64> {
        if !self.succeeded() {
            return None;
        }
        let r2 = self.valid_summary().r2.0;
        r2.is_finite().then_some(r2)
    }
}

/// Counts fold-membership checks made before each fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub checks: usize,
    pub violations: usize,
}

impl LeakageAudit {
    pub fn merge(&mut self, other: LeakageAudit) {
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub trials: Vec<TrialResult>,
    pub audit: LeakageAudit,
    pub failed_trials: usize,
}

impl SweepOutcome {
    pub fn failure_rate(&self) -> f64 {
        if self.trials.is_empty() {
            0.0
        } else {
            self.failed_trials as f64 / self.trials.len() as f64
        }
    }
}

pub(crate) fn take_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub(crate) fn take_cells(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Training/validation row split for one CV fold, with leakage checks.
pub(crate) struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub leaked: bool,
}

pub(crate) fn make_split(
    plan: &CvPlan,
    data: &ModelData,
    validation: u8,
    checks: &AtomicUsize,
    violations: &AtomicUsize,
) -> Split {
    let train = data.rows_in_folds(&plan.training_folds(validation));
    let valid = data.rows_in_folds(&[validation]);
    let held_out: HashSet<&str> =
        data.rows_in_folds(&[plan.test_fold]).iter().map(|&i| data.compound_ids[i].as_str()).collect();
    let valid_ids: HashSet<&str> = valid.iter().map(|&i| data.compound_ids[i].as_str()).collect();
    checks.fetch_add(1, Ordering::Relaxed);
    let leaked = train.iter().any(|&i| {
        let id = data.compound_ids[i].as_str();
        data.folds[i] == plan.test_fold || held_out.contains(id) || valid_ids.contains(id)
    }) || valid.iter().any(|&i| held_out.contains(data.compound_ids[i].as_str()));
    if leaked {
        violations.fetch_add(1, Ordering::Relaxed);
    }
    Split { train, valid, leaked }
}

pub(crate) fn target_columns(data: &ModelData, names: &[String]) -> Result<Vec<usize>, TuningError> {
    names
        .iter()
        .map(|n| data.target_index(n).ok_or_else(|| TuningError::UnknownTarget(n.clone())))
        .collect()
}

/// Fits `params` on the training rows and returns predictions for the
/// training and `eval` rows.
pub(crate) fn fit_and_predict(
    params: &ModelParams,
    seed: u64,
    data: &ModelData,
    cols: &[usize],
    split: &Split,
    eval: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>), String> {
    let x_train = take_rows(&data.x, &split.train);
    let y_train = take_cells(&data.y, &split.train, cols);
    let spec = RegressorSpec::new(params.clone(), seed);
    let monitor = matches!(params, ModelParams::Mlp(_))
        .then(|| (take_rows(&data.x, &split.valid), take_cells(&data.y, &split.valid, cols)));
    let model = TrainedModel::fit(&spec, &x_train, &y_train, monitor.as_ref().map(|(a, b)| (a, b)))
        .map_err(|e| e.to_string())?;
    let p_train = model.predict(&x_train).map_err(|e| e.to_string())?;
    let p_eval = model.predict(&take_rows(&data.x, eval)).map_err(|e| e.to_string())?;
    Ok((p_train, p_eval))
}

pub(crate) fn column_metrics(data: &ModelData, rows: &[usize], col: usize, pred: &DMatrix<f64>, k: usize) -> Metrics {
    let y: Vec<f64> = rows.iter().map(|&i| data.y[(i, col)]).collect();
    let p: Vec<f64> = pred.column(k).iter().copied().collect();
    Metrics::compute(&y, &p)
}

pub(crate) fn groups_for(spec: &SweepSpec) -> Result<Vec<Vec<String>>, TuningError> {
    if spec.targets.is_empty() {
        return Err(TuningError::Config(format!("{} sweep has no targets", spec.class)));
    }
    match spec.mode {
        TaskMode::Single => {
            if !spec.class.supports_single_task() {
                return Err(TuningError::UnsupportedMode(spec.class, spec.mode));
            }
            Ok(spec.targets.iter().map(|t| vec![t.clone()]).collect())
        }
        TaskMode::Multi => {
            if !spec.class.supports_multitask() {
                return Err(TuningError::UnsupportedMode(spec.class, spec.mode));
            }
            Ok(vec![spec.targets.clone()])
        }
    }
}

/// Evaluates every grid point × CV fold × repeat. Jobs run on the current
/// rayon pool; results are ordered by (group, grid index, fold, repeat)
/// before aggregation so the output does not depend on scheduling.
pub fn run_grid(plan: &CvPlan, data: &ModelData, spec: &SweepSpec) -> Result<SweepOutcome, TuningError> {
    plan.check(data)?;
    if spec.grid.is_empty() {
        return Err(TuningError::EmptyGrid(spec.class));
    }
    if let Some(p) = spec.grid.iter().find(|p| p.class() != spec.class) {
        return Err(TuningError::Config(format!("grid for {} contains {} parameters", spec.class, p.class())));
    }
    let groups = groups_for(spec)?;
    let group_cols: Vec<Vec<usize>> = groups.iter().map(|g| target_columns(data, g)).collect::<Result<_, _>>()?;
    let repeats = plan.repeats_for(spec.class);
    let mut jobs = Vec::new();
    for g in 0..groups.len() {
        for i in 0..spec.grid.len() {
            for &f in &plan.cv_folds {
                for r in 0..repeats {
                    jobs.push((g, i, f, r));
                }
            }
        }
    }
    let checks = AtomicUsize::new(0);
    let violations = AtomicUsize::new(0);
    log::info!(
        "{} {} sweep on {}: {} grid points, {} fits",
        spec.class,
        spec.mode.label(),
        data.representation,
        spec.grid.len(),
        jobs.len()
    );
    let mut results: Vec<((usize, usize, u8, usize), u64, Result<Vec<(Metrics, Metrics)>, String>)> = jobs
        .par_iter()
        .map(|&(g, i, f, r)| {
            let seed = plan.trial_seed(i, f, r);
            let split = make_split(plan, data, f, &checks, &violations);
            let cols = &group_cols[g];
            let res = if split.leaked {
                Err("leakage check failed".to_string())
            } else {
                fit_and_predict(&spec.grid[i], seed, data, cols, &split, &split.valid).map(|(pt, pv)| {
                    (0..cols.len())
                        .map(|k| {
                            (
                                column_metrics(data, &split.train, cols[k], &pt, k),
                                column_metrics(data, &split.valid, cols[k], &pv, k),
                            )
                        })
                        .collect()
                })
            };
            ((g, i, f, r), seed, res)
        })
        .collect();
    results.sort_by_key(|(key, _, _)| *key);

    let mut trials = Vec::new();
    let mut failed = 0;
    let per_point = plan.cv_folds.len() * repeats;
    for chunk in results.chunks(per_point) {
        let (g, i, _, _) = chunk[0].0;
        let error = chunk.iter().find_map(|(_, _, r)| r.as_ref().err().cloned());
        for (k, target) in groups[g].iter().enumerate() {
            let runs = chunk
                .iter()
                .filter_map(|((_, _, f, r), seed, res)| {
                    res.as_ref().ok().map(|m| RunMetrics { fold: *f, repeat: *r, seed: *seed, train: m[k].0, valid: m[k].1 })
                })
                .collect();
            if error.is_some() {
                failed += 1;
            }
            trials.push(TrialResult {
                representation: data.representation.clone(),
                class: spec.class,
                mode: spec.mode,
                group: groups[g].clone(),
                target: target.clone(),
                grid_index: i,
                params: spec.grid[i].clone(),
                runs,
                error: error.clone(),
            });
        }
    }
    let outcome = SweepOutcome {
        trials,
        audit: LeakageAudit { checks: checks.into_inner(), violations: violations.into_inner() },
        failed_trials: failed,
    };
    if outcome.failure_rate() > 0.1 {
        log::warn!(
            "{} {} sweep on {}: {} of {} trials failed",
            spec.class,
            spec.mode.label(),
            data.representation,
            outcome.failed_trials,
            outcome.trials.len()
        );
    }
    Ok(outcome)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, TuningError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| TuningError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
