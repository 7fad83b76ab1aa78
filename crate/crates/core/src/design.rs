//! Compound-library design helpers: greedy forward feature selection with
//! linear models and greedy D-optimal subset selection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::split_folds;
use crate::models::{fit_elastic_net, fit_least_squares, fit_pls, CdSettings, LinearFit};
use crate::tuning::metric_r2;

/// Ridge term added to the information matrix.
pub const D_OPTIMAL_EPS: f64 = 1e-8;
const TIE_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("requested {k} rows but only {n} are available")]
    KTooLarge { k: usize, n: usize },
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains missing or non-finite values")]
    NonFinite,
    #[error("owned row {0} is out of range")]
    BadOwned(usize),
    #[error("{0}")]
    Fold(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearFamily {
    Ols,
    Lasso,
    Ridge,
    Pls,
}

impl std::str::FromStr for LinearFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ols" | "linear" => Ok(LinearFamily::Ols),
            "lasso" => Ok(LinearFamily::Lasso),
            "ridge" => Ok(LinearFamily::Ridge),
            "pls" => Ok(LinearFamily::Pls),
            other => Err(format!("unknown model family {other:?}")),
        }
    }
}

const PENALTIES: [f64; 4] = [0.001, 0.01, 0.1, 1.0];
const FFS_FOLDS: u8 = 5;

/// Settings of the inner cross-validation used to score feature subsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionCv {
    pub seed: u64,
}

fn take(x: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| x[(rows[i], cols[j])])
}

fn predict_fit(fit: &LinearFit, x: &DMatrix<f64>) -> Vec<f64> {
    fit.predict(x).column(0).iter().copied().collect()
}

/// Mean validation R² over the folds for one candidate setting.
fn cv_score(
    x: &DMatrix<f64>,
    y: &[f64],
    cols: &[usize],
    folds: &[u8],
    fit: impl Fn(&DMatrix<f64>, &[f64]) -> Option<Box<dyn Fn(&DMatrix<f64>) -> Vec<f64>>>,
) -> f64 {
    let mut total = 0.0;
    let mut used = 0;
    for f in 0..FFS_FOLDS {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let valid: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let yv: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
        let Some(model) = fit(&take(x, &train, cols), &yt) else {
            return f64::NEG_INFINITY;
        };
        match metric_r2(&yv, &model(&take(x, &valid, cols))) {
            Ok(r2) => {
                total += r2;
                used += 1;
            }
            Err(_) => continue,
        }
    }
    if used == 0 {
        f64::NEG_INFINITY
    } else {
        total / used as f64
    }
}

/// Best mean CV R² of `family` on the columns `cols`, tuning its single
/// hyperparameter (penalty or component count) on the same folds.
fn family_score(x: &DMatrix<f64>, y: &[f64], cols: &[usize], folds: &[u8], family: LinearFamily) -> f64 {
    match family {
        LinearFamily::Ols => cv_score(x, y, cols, folds, |xt, yt| {
            let fit = fit_least_squares(xt, yt).ok()?;
            Some(Box::new(move |xv: &DMatrix<f64>| predict_fit(&fit, xv)))
        }),
        LinearFamily::Lasso | LinearFamily::Ridge => {
            let ratio = if family == LinearFamily::Lasso { 1.0 } else { 0.0 };
            PENALTIES
                .iter()
                .map(|&alpha| {
                    cv_score(x, y, cols, folds, |xt, yt| {
                        let fit = fit_elastic_net(xt, yt, alpha, ratio, CdSettings::default(), None).ok()?;
                        Some(Box::new(move |xv: &DMatrix<f64>| predict_fit(&fit, xv)))
                    })
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
        LinearFamily::Pls => {
            let min_train = y.len() - y.len().div_ceil(FFS_FOLDS as usize);
            let max_k = cols.len().min(min_train.saturating_sub(1)).min(5);
            (1..=max_k)
                .map(|k| {
                    cv_score(x, y, cols, folds, |xt, yt| {
                        let ym = DMatrix::from_column_slice(yt.len(), 1, yt);
                        let fit = fit_pls(xt, &ym, k).ok()?;
                        Some(Box::new(move |xv: &DMatrix<f64>| fit.predict(xv).column(0).iter().copied().collect()))
                    })
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Greedy forward selection of `k` columns. Each step adds the column whose
/// inclusion gives the highest mean 5-fold validation R²; ties go to the
/// lowest column index.
pub fn forward_feature_select(
    x: &DMatrix<f64>,
    y: &[f64],
    family: LinearFamily,
    k: usize,
    cv: SelectionCv,
) -> Result<Vec<usize>, DesignError> {
    let (n, d) = x.shape();
    if y.len() != n {
        return Err(DesignError::DimensionMismatch { expected: n, got: y.len() });
    }
    if k > d {
        return Err(DesignError::KTooLarge { k, n: d });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DesignError::NonFinite);
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(DesignError::DegenerateTarget);
    }
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let assignment = split_folds(&ids, cv.seed).map_err(|e| DesignError::Fold(e.to_string()))?;
    let folds: Vec<u8> = ids.iter().map(|id| assignment.fold_of(id).unwrap()).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    while chosen.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..d).filter(|j| !chosen.contains(j)) {
            let mut cols = chosen.clone();
            cols.push(j);
            let score = family_score(x, y, &cols, &folds, family);
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, j));
            }
        }
        chosen.push(best.unwrap().1);
    }
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DOptimalSelection {
    /// Newly chosen rows in selection order (owned rows excluded).
    pub chosen: Vec<usize>,
    /// log det(εI + X_SᵀX_S) after the owned rows and after each pick.
    pub log_det: Vec<f64>,
}

/// log det(εI + X_SᵀX_S) computed directly.
pub fn information_log_det(pool: &DMatrix<f64>, rows: &[usize], eps: f64) -> f64 {
    let d = pool.ncols();
    let mut m = DMatrix::identity(d, d) * eps;
    for &r in rows {
        let x = pool.row(r).transpose();
        m += &x * x.transpose();
    }
    match m.cholesky() {
        Some(c) => 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

/// Greedy D-optimal augmentation of the `owned` rows by `k` further rows.
/// Each step picks the candidate with the largest determinant gain
/// 1 + xᵀM⁻¹x, updating M⁻¹ by Sherman–Morrison. Gains equal within a
/// relative 1e-10 are broken by a draw from `seed`.
pub fn d_optimal_select(pool: &DMatrix<f64>, k: usize, owned: &[usize], seed: u64) -> Result<DOptimalSelection, DesignError> {
    let (n, d) = pool.shape();
    if let Some(&bad) = owned.iter().find(|&&o| o >= n) {
        return Err(DesignError::BadOwned(bad));
    }
    let mut taken = vec![false; n];
    for &o in owned {
        taken[o] = true;
    }
    let available = taken.iter().filter(|t| !**t).count();
    if k > available {
        return Err(DesignError::KTooLarge { k, n: available });
    }
    if pool.iter().any(|v| !v.is_finite()) {
        return Err(DesignError::NonFinite);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m_inv = DMatrix::identity(d, d) / D_OPTIMAL_EPS;
    let mut log_det = d as f64 * D_OPTIMAL_EPS.ln();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| pool.row(i).transpose()).collect();
    let add = |x: &DVector<f64>, m_inv: &mut DMatrix<f64>| -> f64 {
        let mx = &*m_inv * x;
        let gain = 1.0 + x.dot(&mx);
        *m_inv -= &mx * mx.transpose() / gain;
        gain
    };
    let mut seen = Vec::with_capacity(owned.len());
    for &o in owned {
        if seen.contains(&o) {
            continue;
        }
        seen.push(o);
        log_det += add(&rows[o], &mut m_inv).ln();
    }
    let mut trace = vec![log_det];
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let gains: Vec<(usize, f64)> =
            (0..n).filter(|&i| !taken[i]).map(|i| (i, 1.0 + rows[i].dot(&(&m_inv * &rows[i])))).collect();
        let top = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = gains.iter().filter(|g| g.1 >= top * (1.0 - TIE_REL)).map(|g| g.0).collect();
        let pick = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
        taken[pick] = true;
        log_det += add(&rows[pick], &mut m_inv).ln();
        trace.push(log_det);
        chosen.push(pick);
    }
    Ok(DOptimalSelection { chosen, log_det: trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_rows_largest_norms_first() {
        let pool = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0]);
        let sel = d_optimal_select(&pool, 2, &[], 0).unwrap();
        assert_eq!(sel.chosen, vec![2, 0]);
        assert!(matches!(d_optimal_select(&pool, 4, &[], 0), Err(DesignError::KTooLarge { .. })));
    }

    #[test]
    fn owned_rows_are_not_repicked() {
        let pool = DMatrix::from_fn(6, 2, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0);
        let sel = d_optimal_select(&pool, 3, &[0, 1], 4).unwrap();
        assert!(!sel.chosen.contains(&0) && !sel.chosen.contains(&1));
        assert_eq!(sel.log_det.len(), 4);
    }

    #[test]
    fn constant_target_is_degenerate() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * (j + 1)) as f64);
        assert_eq!(
            forward_feature_select(&x, &[1.0; 10], LinearFamily::Ols, 1, SelectionCv { seed: 0 }),
            Err(DesignError::DegenerateTarget)
        );
    }
}
