//! Elastic-net coefficients per target and CV fold as a feature-importance
//! matrix.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::svg::{diverging, Svg};
use super::AnalyzeError;
use crate::data::{format_value, ModelData};
use crate::models::{ElasticNetParams, Fitted, ModelParams, RegressorSpec, TrainedModel};
use crate::tuning::{CvPlan, SelectionReport, TaskMode};

/// Rows are (target, validation fold) pairs in target-major order; cells
/// are coefficients on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMatrix {
    pub representation: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<(String, u8)>,
    pub coef: DMatrix<f64>,
}

impl ImportanceMatrix {
    /// Rows belonging to `target`, in fold order.
    pub fn target_block(&self, target: &str) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i].0 == target).collect();
        DMatrix::from_fn(idx.len(), self.coef.ncols(), |i, j| self.coef[(idx[i], j)])
    }

    /// Mean coefficient per feature over the folds of `target`.
    pub fn mean_for(&self, target: &str) -> Vec<f64> {
        let block = self.target_block(target);
        (0..block.ncols()).map(|j| block.column(j).mean()).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalyzeError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["target".to_string(), "fold".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (i, (target, fold)) in self.rows.iter().enumerate() {
            let mut rec = vec![target.clone(), fold.to_string()];
            rec.extend(self.coef.row(i).iter().map(|&v| format_value(Some(v))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Heatmap with one 4-row block per target, colour scaled to the
    /// largest absolute coefficient.
    pub fn heatmap_svg(&self) -> String {
        let (cell_w, cell_h, left, top) = (12.0, 12.0, 90.0, 150.0);
        let (n, d) = self.coef.shape();
        let gaps = self.rows.windows(2).filter(|w| w[0].0 != w[1].0).count() as f64;
        let width = left + d as f64 * cell_w + 20.0;
        let height = top + n as f64 * cell_h + gaps * 4.0 + 20.0;
        let scale = self.coef.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut svg = Svg::new(width, height);
        for (j, name) in self.feature_names.iter().enumerate() {
            svg.text(left + (j as f64 + 0.7) * cell_w, top - 4.0, name, "start", Some(-60.0));
        }
        let mut y = top;
        for (i, (target, fold)) in self.rows.iter().enumerate() {
            if i > 0 && self.rows[i - 1].0 != *target {
                y += 4.0;
            }
            svg.text(left - 4.0, y + cell_h - 2.0, &format!("{target} f{fold}"), "end", None);
            for j in 0..d {
                let t = if scale > 0.0 { self.coef[(i, j)] / scale } else { 0.0 };
                svg.rect(left + j as f64 * cell_w, y, cell_w, cell_h, &diverging(t), None);
            }
            y += cell_h;
        }
        svg.finish(&format!("{} elastic-net coefficients", self.representation))
    }
}

pub fn read_importance_csv<R: Read>(reader: R, representation: &str) -> Result<ImportanceMatrix, AnalyzeError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "target" || &header[1] != "fold" {
        return Err(AnalyzeError::Format("expected target,fold,... header".into()));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let fold = rec[1].parse::<u8>().map_err(|_| AnalyzeError::Format(format!("row {}: bad fold {:?}", r + 1, &rec[1])))?;
        rows.push((rec[0].to_string(), fold));
        for cell in rec.iter().skip(2) {
            values.push(cell.parse::<f64>().map_err(|_| AnalyzeError::Format(format!("row {}: bad value {cell:?}", r + 1)))?);
        }
    }
    let coef = DMatrix::from_row_slice(rows.len(), feature_names.len(), &values);
    Ok(ImportanceMatrix { representation: representation.to_string(), feature_names, rows, coef })
}

/// Refits a single-task elastic net per target on each CV training split
/// and collects the coefficients.
pub fn feature_importance(
    plan: &CvPlan,
    data: &ModelData,
    tuned: &[(String, ElasticNetParams, usize)],
) -> Result<ImportanceMatrix, AnalyzeError> {
    let d = data.x.ncols();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (target, params, grid_index) in tuned {
        let col = data.target_index(target).ok_or_else(|| AnalyzeError::UnknownTarget(target.clone()))?;
        for &fold in &plan.cv_folds {
            let train = data.rows_in_folds(&plan.training_folds(fold));
            let x = DMatrix::from_fn(train.len(), d, |i, j| data.x[(train[i], j)]);
            let y = DMatrix::from_fn(train.len(), 1, |i, _| data.y[(train[i], col)]);
            let spec = RegressorSpec::new(ModelParams::En(params.clone()), plan.trial_seed(*grid_index, fold, 0));
            let fail = |message: String| AnalyzeError::Fit { target: target.clone(), fold, message };
            let model = TrainedModel::fit(&spec, &x, &y, None).map_err(|e| fail(e.to_string()))?;
            let Fitted::Linear(fit) = &model.fitted else {
                return Err(fail("elastic net did not produce a linear fit".into()));
            };
            values.extend(fit.coef.column(0).iter().copied());
            rows.push((target.clone(), fold));
        }
    }
    Ok(ImportanceMatrix {
        representation: data.representation.clone(),
        feature_names: data.feature_names.clone(),
        coef: DMatrix::from_row_slice(rows.len(), d, &values),
        rows,
    })
}

/// Importance matrix for the tuned single-task elastic nets of `data`'s
/// representation, targets in dataset order.
pub fn importance_from_selection(
    plan: &CvPlan,
    data: &ModelData,
    report: &SelectionReport,
) -> Result<ImportanceMatrix, AnalyzeError> {
    let mut tuned = Vec::new();
    for target in &data.target_names {
        let entry = report.entries.iter().find(|e| {
            let t = &e.trial;
            t.class == crate::models::ModelClass::En
                && t.mode == TaskMode::Single
                && t.representation == data.representation
                && t.target == *target
        });
        if let Some(e) = entry {
            if let ModelParams::En(p) = &e.trial.params {
                tuned.push((target.clone(), p.clone(), e.trial.grid_index));
            }
        }
    }
    feature_importance(plan, data, &tuned)
}
