//! Principal component analysis of centered data via a one-sided Jacobi SVD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::MeanLogPe;
use crate::linalg::{jacobi_rotate, sorted_norms};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcaError {
    #[error("need at least two rows with non-constant values")]
    DegenerateInput,
    #[error("requested {k} components but at most {max} are available")]
    TooManyComponents { k: usize, max: usize },
    #[error("dimension mismatch: model has {expected} columns, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub column_means: DVector<f64>,
    /// k × d, rows are orthonormal loading vectors.
    pub components: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub explained_variance_ratio: DVector<f64>,
    pub n_samples: usize,
}

/// Centers the columns and keeps the leading `k` right singular vectors.
/// Each component is sign-flipped so its largest-magnitude loading is positive.
pub fn pca_fit(x: &DMatrix<f64>, k: usize) -> Result<PcaModel, PcaError> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(PcaError::DegenerateInput);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }
    let max = n.min(d);
    if k > max {
        return Err(PcaError::TooManyComponents { k, max });
    }
    let means = DVector::from_fn(d, |j, _| x.column(j).mean());
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    let (rotated, v) = jacobi_rotate(&centered);
    let (order, norms) = sorted_norms(&rotated);
    let total: f64 = norms.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(PcaError::DegenerateInput);
    }
    let mut components = DMatrix::zeros(k, d);
    for (r, &src) in order.iter().take(k).enumerate() {
        let mut row: Vec<f64> = v.column(src).iter().copied().collect();
        let pivot = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        for (j, v) in row.into_iter().enumerate() {
            components[(r, j)] = v;
        }
    }
    let singular_values = DVector::from_iterator(k, order.iter().take(k).map(|&i| norms[i]));
    let explained_variance_ratio = singular_values.map(|s| s * s / total);
    Ok(PcaModel { column_means: means, components, singular_values, explained_variance_ratio, n_samples: n })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Variance of each score column, σ²/(n−1).
    pub fn explained_variance(&self) -> DVector<f64> {
        let denom = (self.n_samples - 1) as f64;
        self.singular_values.map(|s| s * s / denom)
    }

    /// `(X − means)·componentsᵀ`.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, PcaError> {
        let d = self.column_means.len();
        if x.ncols() != d {
            return Err(PcaError::DimensionMismatch { expected: d, got: x.ncols() });
        }
        let centered = DMatrix::from_fn(x.nrows(), d, |i, j| x[(i, j)] - self.column_means[j]);
        Ok(centered * self.components.transpose())
    }

    /// Maps scores back to the input space.
    pub fn inverse_transform(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>, PcaError> {
        if scores.ncols() != self.n_components() {
            return Err(PcaError::DimensionMismatch { expected: self.n_components(), got: scores.ncols() });
        }
        let mut out = scores * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.column_means.transpose();
        }
        Ok(out)
    }
}

pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>, PcaError> {
    model.transform(x)
}

/// PCA of the per-compound mean logPe matrix. Compounds with any missing
/// membrane value are left out of the fit and listed in `dropped`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPePca {
    pub model: PcaModel,
    pub compound_ids: Vec<String>,
    pub scores: DMatrix<f64>,
    pub dropped: Vec<String>,
}

pub fn fit_logpe_pca(table: &MeanLogPe, k: usize) -> Result<LogPePca, PcaError> {
    let (ids, rows, dropped) = table.complete_rows();
    let x = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let model = pca_fit(&x, k)?;
    let scores = model.transform(&x)?;
    Ok(LogPePca { model, compound_ids: ids, scores, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_rank_one() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        let m = pca_fit(&x, 1).unwrap();
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        let s5 = 5f64.sqrt();
        assert!((m.components[(0, 0)] - 1.0 / s5).abs() < 1e-12);
        assert!((m.components[(0, 1)] - 2.0 / s5).abs() < 1e-12);
    }

    #[test]
    fn means_row_maps_to_origin_and_round_trip() {
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * (i * j) as f64);
        let m = pca_fit(&x, 3).unwrap();
        let mean_row = DMatrix::from_fn(1, 3, |_, j| m.column_means[j]);
        assert!(m.transform(&mean_row).unwrap().amax() < 1e-12);
        let back = m.inverse_transform(&m.transform(&x).unwrap()).unwrap();
        assert!((back - &x).amax() < 1e-8);
        let scores = m.transform(&x).unwrap();
        let var = m.explained_variance();
        for c in 0..3 {
            let col = scores.column(c);
            let v = col.iter().map(|s| s * s).sum::<f64>() / 5.0;
            assert!((v - var[c]).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate() {
        assert_eq!(pca_fit(&DMatrix::from_element(1, 3, 1.0), 1), Err(PcaError::DegenerateInput));
        assert_eq!(pca_fit(&DMatrix::from_element(4, 3, 1.0), 1), Err(PcaError::DegenerateInput));
        assert!(matches!(pca_fit(&DMatrix::from_element(2, 3, 1.0), 3), Err(PcaError::TooManyComponents { .. })));
    }
}
