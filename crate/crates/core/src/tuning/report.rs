//! CSV renderings of sweep, selection and pairing results.

use std::io::Write;

use super::select::{PairingTable, SelectionReport};
use super::sweep::{MetricSummary, TrialResult};
use super::TuningError;
use crate::data::format_value;

/// "mean (std)" with four decimals, as in published tables.
pub fn mean_std_cell(ms: (f64, f64)) -> String {
    format!("{:.4} ({:.4})", ms.0, ms.1)
}

fn raw(v: f64) -> String {
    format_value(Some(v))
}

fn summary_cells(s: Option<MetricSummary>) -> [String; 3] {
    match s {
        Some(s) => [mean_std_cell(s.corr), mean_std_cell(s.r2), mean_std_cell(s.rmse)],
        None => [String::new(), String::new(), String::new()],
    }
}

fn status(t: &TrialResult) -> &'static str {
    if t.succeeded() {
        "ok"
    } else {
        "failed"
    }
}

pub fn write_trials_csv<W: Write>(trials: &[TrialResult], writer: W) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "representation",
        "model",
        "mode",
        "group",
        "target",
        "grid_index",
        "hyperparameters",
        "status",
        "n_runs",
        "corr_train",
        "corr_valid",
        "r2_train",
        "r2_valid",
        "rmse_train",
        "rmse_valid",
        "r2_valid_mean",
        "r2_valid_std",
        "error",
    ])?;
    for t in trials {
        let (tr, va) = (t.train_summary(), t.valid_summary());
        w.write_record([
            t.representation.clone(),
            t.class.label().to_string(),
            t.mode.label().to_string(),
            t.group.join("+"),
            t.target.clone(),
            t.grid_index.to_string(),
            t.params.describe(),
            status(t).to_string(),
            t.runs.len().to_string(),
            mean_std_cell(tr.corr),
            mean_std_cell(va.corr),
            mean_std_cell(tr.r2),
            mean_std_cell(va.r2),
            mean_std_cell(tr.rmse),
            mean_std_cell(va.rmse),
            raw(va.r2.0),
            raw(va.r2.1),
            t.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per fit, the raw material of every aggregate.
pub fn write_runs_csv<W: Write>(trials: &[TrialResult], writer: W) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "representation",
        "model",
        "mode",
        "target",
        "grid_index",
        "fold",
        "repeat",
        "seed",
        "corr_train",
        "r2_train",
        "rmse_train",
        "corr_valid",
        "r2_valid",
        "rmse_valid",
    ])?;
    for t in trials {
        for r in &t.runs {
            w.write_record([
                t.representation.clone(),
                t.class.label().to_string(),
                t.mode.label().to_string(),
                t.target.clone(),
                t.grid_index.to_string(),
                r.fold.to_string(),
                r.repeat.to_string(),
                r.seed.to_string(),
                raw(r.train.corr),
                raw(r.train.r2),
                raw(r.train.rmse),
                raw(r.valid.corr),
                raw(r.valid.r2),
                raw(r.valid.rmse),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_selection_csv<W: Write>(report: &SelectionReport, writer: W) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "representation",
        "model",
        "mode",
        "group",
        "target",
        "grid_index",
        "hyperparameters",
        "overall_best",
        "corr_train",
        "corr_valid",
        "corr_test",
        "r2_train",
        "r2_valid",
        "r2_test",
        "rmse_train",
        "rmse_valid",
        "rmse_test",
        "r2_valid_mean",
        "r2_test_mean",
    ])?;
    for e in &report.entries {
        let t = &e.trial;
        let tr = summary_cells(Some(t.train_summary()));
        let va = summary_cells(Some(t.valid_summary()));
        let test = e.test_summary();
        let te = summary_cells(test);
        w.write_record([
            t.representation.clone(),
            t.class.label().to_string(),
            t.mode.label().to_string(),
            t.group.join("+"),
            t.target.clone(),
            t.grid_index.to_string(),
            t.params.describe(),
            e.overall_best.to_string(),
            tr[0].clone(),
            va[0].clone(),
            te[0].clone(),
            tr[1].clone(),
            va[1].clone(),
            te[1].clone(),
            tr[2].clone(),
            va[2].clone(),
            te[2].clone(),
            raw(t.valid_summary().r2.0),
            test.map(|s| raw(s.r2.0)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pairs_csv<W: Write>(table: &PairingTable, writer: W) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["family", "representation", "target", "single_r2", "multi_r2", "multi_wins"])?;
    for r in &table.rows {
        w.write_record([
            r.family.clone(),
            r.representation.clone(),
            r.target.clone(),
            format_value(r.single_r2),
            format_value(r.multi_r2),
            r.multi_wins().map(|b| b.to_string()).unwrap_or_else(|| "missing".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per test-fold evaluation of a selected model.
pub fn write_test_runs_csv<W: Write>(report: &SelectionReport, writer: W) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "representation",
        "model",
        "mode",
        "target",
        "grid_index",
        "cv_fold",
        "repeat",
        "seed",
        "corr_test",
        "r2_test",
        "rmse_test",
    ])?;
    for e in &report.entries {
        let t = &e.trial;
        for r in &e.test_runs {
            w.write_record([
                t.representation.clone(),
                t.class.label().to_string(),
                t.mode.label().to_string(),
                t.target.clone(),
                t.grid_index.to_string(),
                r.fold.to_string(),
                r.repeat.to_string(),
                r.seed.to_string(),
                raw(r.test.corr),
                raw(r.test.r2),
                raw(r.test.rmse),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
