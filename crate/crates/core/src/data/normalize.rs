//! Column standardization with population statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DataError, DescriptorTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn column_moments(x: &DMatrix<f64>, rows: &[usize], j: usize) -> Option<(f64, f64)> {
    let vals: Vec<f64> = rows.iter().map(|&i| x[(i, j)]).filter(|v| !v.is_nan()).collect();
    if vals.is_empty() {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl NormalizationStats {
    /// Mean and population std of each column over `rows` (all rows when
    /// `None`), ignoring missing cells.
    pub fn fit(x: &DMatrix<f64>, names: &[String], rows: Option<&[usize]>) -> Result<Self, DataError> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..x.nrows()).collect();
                &all
            }
        };
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            match column_moments(x, rows, j) {
                Some((m, s)) if s > 0.0 && s.is_finite() => {
                    mean.push(m);
                    std.push(s);
                }
                _ => return Err(DataError::ZeroVariance(names.get(j).cloned().unwrap_or_else(|| j.to_string()))),
            }
        }
        Ok(NormalizationStats { names: names.to_vec(), mean, std })
    }

    /// Like [`fit`](Self::fit) but constant or empty columns get std 1, so
    /// they standardize to zero instead of failing. Used inside training
    /// splits where sparse bit columns are often constant.
    pub fn fit_lenient(x: &DMatrix<f64>, names: &[String], rows: &[usize]) -> Self {
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let (m, s) = column_moments(x, rows, j).unwrap_or((0.0, 0.0));
            mean.push(m);
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        NormalizationStats { names: names.to_vec(), mean, std }
    }

    /// `(x − mean) / std`; missing cells become 0, i.e. the training mean.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, DataError> {
        if x.ncols() != self.mean.len() {
            return Err(DataError::DimensionMismatch { expected: self.mean.len(), got: x.ncols() });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let v = x[(i, j)];
            if v.is_nan() {
                0.0
            } else {
                (v - self.mean[j]) / self.std[j]
            }
        }))
    }

    pub fn apply_rows(&self, x: &DMatrix<f64>, rows: &[usize]) -> Result<DMatrix<f64>, DataError> {
        let sub = DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)]);
        self.apply(&sub)
    }

    /// Reads published `*_columns.json` files. Accepted shapes: an object
    /// mapping name → `{"mean":…, "std":…}` (also `er`/`sd`/`scale` keys) or
    /// name → `[mean, std]`, or a list of objects carrying a `name` key.
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| DataError::Normalization(e.to_string()))?;
        let mut out = NormalizationStats { names: Vec::new(), mean: Vec::new(), std: Vec::new() };
        let mut push = |name: String, entry: &serde_json::Value| -> Result<(), DataError> {
            let (m, s) = read_pair(entry).ok_or_else(|| DataError::Normalization(format!("entry {name:?}")))?;
            if !(s > 0.0) {
                return Err(DataError::ZeroVariance(name));
            }
            out.names.push(name);
            out.mean.push(m);
            out.std.push(s);
            Ok(())
        };
        match &v {
            serde_json::Value::Object(map) => {
                for (k, e) in map {
                    push(k.clone(), e)?;
                }
            }
            serde_json::Value::Array(items) => {
                for e in items {
                    let name = e
                        .get("name")
                        .and_then(|n| n.as_str())
                        .ok_or_else(|| DataError::Normalization("list entry without name".into()))?;
                    push(name.to_string(), e)?;
                }
            }
            _ => return Err(DataError::Normalization("expected object or array".into())),
        }
        Ok(out)
    }

    /// Reorders to the given column names.
    pub fn aligned_to(&self, names: &[String]) -> Result<Self, DataError> {
        let mut out = NormalizationStats { names: names.to_vec(), mean: Vec::new(), std: Vec::new() };
        for n in names {
            let i = self
                .names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| DataError::Schema { missing: vec![n.clone()], extra: Vec::new() })?;
            out.mean.push(self.mean[i]);
            out.std.push(self.std[i]);
        }
        Ok(out)
    }
}

fn read_pair(e: &serde_json::Value) -> Option<(f64, f64)> {
    if let Some(a) = e.as_array() {
        return Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?));
    }
    let get = |keys: &[&str]| keys.iter().find_map(|k| e.get(*k).and_then(|v| v.as_f64()));
    Some((get(&["mean", "mu", "avg"])?, get(&["std", "er", "sd", "scale", "stdev"])?))
}

/// Standardizes a dense table, fitting statistics on all rows unless `stats`
/// is supplied.
pub fn standardize(
    table: &DescriptorTable,
    stats: Option<&NormalizationStats>,
) -> Result<(DescriptorTable, NormalizationStats), DataError> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => NormalizationStats::fit(&table.x, &table.feature_names, None)?,
    };
    let mut out = table.clone();
    out.x = stats.apply(&table.x)?;
    out.fingerprints = None;
    Ok((out, stats))
}
