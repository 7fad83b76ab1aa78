//! Partial least squares regression (NIPALS, PLS2).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ModelError;

const DIRECTION_EPS: f64 = 1e-12;
const INNER_TOL: f64 = 1e-10;
const INNER_MAX: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsFit {
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
    /// d × k weight vectors.
    pub weights: DMatrix<f64>,
    /// d × k X loadings.
    pub x_loadings: DMatrix<f64>,
    /// T × k Y loadings.
    pub y_loadings: DMatrix<f64>,
    /// d × T regression coefficients on centered inputs.
    pub coef: DMatrix<f64>,
    /// Components actually extracted (fewer than requested when Y is
    /// exhausted early).
    pub n_components: usize,
}

impl PlsFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let xc = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] - self.x_mean[j]);
        let mut out = xc * &self.coef;
        for (t, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.y_mean[t]);
        }
        out
    }
}

/// NIPALS on centered X and Y. Missing Y cells are replaced by their column
/// mean before fitting.
pub fn fit_pls(x: &DMatrix<f64>, y: &DMatrix<f64>, n_components: usize) -> Result<PlsFit, ModelError> {
    let (n, d) = x.shape();
    let t_count = y.ncols();
    if y.nrows() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.nrows() });
    }
    if n < 2 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if n_components == 0 || n_components > (n - 1).min(d) {
        return Err(ModelError::InvalidHyperparameter(format!(
            "n_components={n_components} must be in 1..={}",
            (n - 1).min(d)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| v.is_infinite()) {
        return Err(ModelError::NonFinite("PLS input".into()));
    }
    let x_mean = DVector::from_fn(d, |j, _| x.column(j).mean());
    let y_mean = DVector::from_fn(t_count, |t, _| {
        let obs: Vec<f64> = y.column(t).iter().copied().filter(|v| !v.is_nan()).collect();
        if obs.is_empty() {
            0.0
        } else {
            obs.iter().sum::<f64>() / obs.len() as f64
        }
    });
    let mut xr = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - x_mean[j]);
    let mut yr = DMatrix::from_fn(n, t_count, |i, t| if y[(i, t)].is_nan() { 0.0 } else { y[(i, t)] - y_mean[t] });
    let y_scale = yr.norm();

    let mut w_cols: Vec<DVector<f64>> = Vec::new();
    let mut p_cols: Vec<DVector<f64>> = Vec::new();
    let mut q_cols: Vec<DVector<f64>> = Vec::new();
    for _ in 0..n_components {
        if yr.norm() <= DIRECTION_EPS * y_scale.max(1.0) {
            break;
        }
        // start from the Y column with the largest residual variance
        let start = (0..t_count)
            .max_by(|&a, &b| yr.column(a).norm_squared().total_cmp(&yr.column(b).norm_squared()).then(b.cmp(&a)))
            .unwrap();
        let mut u: DVector<f64> = yr.column(start).into_owned();
        let mut w = DVector::zeros(d);
        let mut t = DVector::zeros(n);
        for it in 0..INNER_MAX {
            let mut w_new = xr.transpose() * &u;
            let norm = w_new.norm();
            if norm < DIRECTION_EPS {
                return Err(ModelError::RankDeficient);
            }
            w_new /= norm;
            t = &xr * &w_new;
            let tt = t.norm_squared();
            if tt < DIRECTION_EPS * DIRECTION_EPS {
                return Err(ModelError::RankDeficient);
            }
            let c = yr.transpose() * &t / tt;
            let cc = c.norm_squared();
            let diff = (&w_new - &w).norm();
            w = w_new;
            if t_count == 1 || cc == 0.0 {
                break;
            }
            u = &yr * &c / cc;
            if it > 0 && diff < INNER_TOL {
                break;
            }
        }
        let tt = t.norm_squared();
        let p = xr.transpose() * &t / tt;
        let q = yr.transpose() * &t / tt;
        xr -= &t * p.transpose();
        yr -= &t * q.transpose();
        w_cols.push(w);
        p_cols.push(p);
        q_cols.push(q);
    }
    let k = w_cols.len();
    let weights = DMatrix::from_fn(d, k, |i, a| w_cols[a][i]);
    let x_loadings = DMatrix::from_fn(d, k, |i, a| p_cols[a][i]);
    let y_loadings = DMatrix::from_fn(t_count, k, |i, a| q_cols[a][i]);
    let coef = if k == 0 {
        DMatrix::zeros(d, t_count)
    } else {
        let ptw = x_loadings.transpose() * &weights;
        let inv = ptw.try_inverse().ok_or(ModelError::RankDeficient)?;
        &weights * inv * y_loadings.transpose()
    };
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("PLS coefficients".into()));
    }
    Ok(PlsFit { x_mean, y_mean, weights, x_loadings, y_loadings, coef, n_components: k })
}
