//! Linear models: least squares, elastic net, multi-task elastic net and
//! Bayesian ridge.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::svd;

/// Coefficient matrix (d × T) plus per-task intercepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coef: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl LinearFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x * &self.coef;
        for (t, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.intercept[t]);
        }
        out
    }
}

pub(crate) fn columns(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> Result<(), ModelError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("feature matrix".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("target".into()));
    }
    Ok(())
}

/// Minimum-norm least squares with an intercept (centered SVD solve).
pub fn fit_least_squares(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearFit, ModelError> {
    check_finite(x, y)?;
    let (n, d) = x.shape();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let x_mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let y_mean = mean(y);
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let w = if d == 0 {
        DVector::zeros(0)
    } else {
        let f = svd(&xc);
        let cutoff = f.s.max() * f64::EPSILON * n.max(d) as f64;
        f.solve(&yc, cutoff)
    };
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(LinearFit {
        coef: DMatrix::from_column_slice(d, 1, w.as_slice()),
        intercept: DVector::from_element(1, intercept),
        sweeps: 0,
        converged: true,
    })
}

/// `(1/2n)‖y − Xw − b‖² + αρ‖w‖₁ + (α(1−ρ)/2)‖w‖²`.
pub fn elastic_net_objective(x: &DMatrix<f64>, y: &[f64], w: &[f64], b: f64, alpha: f64, l1_ratio: f64) -> f64 {
    let n = y.len() as f64;
    let mut rss = 0.0;
    for i in 0..y.len() {
        let pred: f64 = b + (0..w.len()).map(|j| x[(i, j)] * w[j]).sum::<f64>();
        rss += (y[i] - pred).powi(2);
    }
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let l2: f64 = w.iter().map(|v| v * v).sum();
    rss / (2.0 * n) + alpha * l1_ratio * l1 + 0.5 * alpha * (1.0 - l1_ratio) * l2
}

/// Cyclic coordinate descent settings.
#[derive(Debug, Clone, Copy)]
pub struct CdSettings {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdSettings {
    fn default() -> Self {
        CdSettings { tol: 1e-6, max_sweeps: 10_000 }
    }
}

/// Elastic net by cyclic coordinate descent on centered data. When `history`
/// is given, the objective after each sweep is appended to it.
pub fn fit_elastic_net(
    x: &DMatrix<f64>,
    y: &[f64],
    alpha: f64,
    l1_ratio: f64,
    settings: CdSettings,
    mut history: Option<&mut Vec<f64>>,
) -> Result<LinearFit, ModelError> {
    if !(alpha >= 0.0) || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(ModelError::InvalidHyperparameter(format!("alpha={alpha}, l1_ratio={l1_ratio}")));
    }
    if alpha == 0.0 {
        return fit_least_squares(x, y);
    }
    check_finite(x, y)?;
    let (n, d) = x.shape();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let y_mean = mean(y);
    let cols: Vec<Vec<f64>> = (0..d).map(|j| (0..n).map(|i| x[(i, j)] - x_mean[j]).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut r: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut w = vec![0.0; d];
    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < settings.max_sweeps {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            if norms[j] == 0.0 {
                continue;
            }
            let c = &cols[j];
            let rho = c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf + norms[j] * w[j];
            let new = soft_threshold(rho, l1) / (norms[j] + l2);
            let delta = new - w[j];
            if delta != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri -= delta * ci;
                }
                w[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if !max_delta.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("elastic net coefficients".into()));
        }
        if let Some(h) = history.as_deref_mut() {
            let rss: f64 = r.iter().map(|v| v * v).sum();
            let pen1: f64 = w.iter().map(|v| v.abs()).sum();
            let pen2: f64 = w.iter().map(|v| v * v).sum();
            h.push(rss / (2.0 * nf) + l1 * pen1 + 0.5 * l2 * pen2);
        }
        if max_delta < settings.tol {
            converged = true;
            break;
        }
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(LinearFit {
        coef: DMatrix::from_column_slice(d, 1, &w),
        intercept: DVector::from_element(1, intercept),
        sweeps,
        converged,
    })
}

/// Minimizes `Σ_t (c_t/2)u_t² − z_t·u_t + λ‖u‖₂` over `u`.
fn group_prox(z: &[f64], c: &[f64], lambda: f64) -> Vec<f64> {
    let active: Vec<bool> = c.iter().map(|&ct| ct > 0.0).collect();
    let znorm = z.iter().zip(&active).filter(|(_, &a)| a).map(|(v, _)| v * v).sum::<f64>().sqrt();
    if lambda == 0.0 {
        return z.iter().zip(c).map(|(&zt, &ct)| if ct > 0.0 { zt / ct } else { 0.0 }).collect();
    }
    if znorm <= lambda {
        return vec![0.0; z.len()];
    }
    // s = ‖u‖ solves Σ (z_t / (c_t s + λ))² = 1; the left side decreases in s.
    let g = |s: f64| -> f64 {
        z.iter().zip(c).filter(|(_, &ct)| ct > 0.0).map(|(&zt, &ct)| (zt / (ct * s + lambda)).powi(2)).sum::<f64>() - 1.0
    };
    let cmin = c.iter().copied().filter(|&ct| ct > 0.0).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0, znorm / cmin);
    let mut s = if c.iter().filter(|&&ct| ct > 0.0).all(|&ct| (ct - cmin).abs() <= 1e-15 * cmin) {
        (znorm - lambda) / cmin
    } else {
        let mut s = 0.5 * hi;
        for _ in 0..200 {
            let val = g(s);
            if val > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let deriv: f64 = z
                .iter()
                .zip(c)
                .filter(|(_, &ct)| ct > 0.0)
                .map(|(&zt, &ct)| -2.0 * zt * zt * ct / (ct * s + lambda).powi(3))
                .sum();
            let mut next = if deriv < 0.0 { s - val / deriv } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * s.max(1e-300) {
                s = next;
                break;
            }
            s = next;
        }
        s
    };
    if s < 0.0 {
        s = 0.0;
    }
    z.iter().zip(c).map(|(&zt, &ct)| if ct > 0.0 { zt * s / (ct * s + lambda) } else { 0.0 }).collect()
}

/// Masked multi-task objective with row-wise group penalty.
pub fn multitask_objective(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    fit: &LinearFit,
    alpha: f64,
    l1_ratio: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let pred = fit.predict(x);
    let mut rss = 0.0;
    for (p, t) in pred.iter().zip(y.iter()) {
        if !t.is_nan() {
            rss += (t - p).powi(2);
        }
    }
    let group: f64 = fit.coef.row_iter().map(|r| r.norm()).sum();
    let fro = fit.coef.norm_squared();
    rss / (2.0 * n) + alpha * l1_ratio * group + 0.5 * alpha * (1.0 - l1_ratio) * fro
}

/// Multi-task elastic net by block coordinate descent. Missing targets
/// (NaN) are masked out of the loss; intercepts are unpenalized
/// coordinates updated once per sweep.
pub fn fit_multitask_elastic_net(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    alpha: f64,
    l1_ratio: f64,
    settings: CdSettings,
) -> Result<LinearFit, ModelError> {
    if !(alpha >= 0.0) || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(ModelError::InvalidHyperparameter(format!("alpha={alpha}, l1_ratio={l1_ratio}")));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| v.is_infinite()) {
        return Err(ModelError::NonFinite("multi-task input".into()));
    }
    let (n, d) = x.shape();
    let t_count = y.ncols();
    if y.nrows() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.nrows() });
    }
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let nf = n as f64;
    let mask: Vec<Vec<bool>> = (0..t_count).map(|t| (0..n).map(|i| !y[(i, t)].is_nan()).collect()).collect();
    let observed: Vec<usize> = mask.iter().map(|m| m.iter().filter(|&&b| b).count()).collect();
    let cols = columns(x);
    // per-task feature means over observed rows, used to start intercepts well
    let mut b: Vec<f64> = (0..t_count)
        .map(|t| {
            if observed[t] == 0 {
                0.0
            } else {
                (0..n).filter(|&i| mask[t][i]).map(|i| y[(i, t)]).sum::<f64>() / observed[t] as f64
            }
        })
        .collect();
    // residuals, zero where masked
    let mut r: Vec<Vec<f64>> =
        (0..t_count).map(|t| (0..n).map(|i| if mask[t][i] { y[(i, t)] - b[t] } else { 0.0 }).collect()).collect();
    let h: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..t_count).map(|t| (0..n).filter(|&i| mask[t][i]).map(|i| cols[j][i].powi(2)).sum::<f64>() / nf).collect())
        .collect();
    let mut w = vec![vec![0.0; t_count]; d];
    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);
    let mut sweeps = 0;
    let mut converged = false;
    let mut z = vec![0.0; t_count];
    let mut c = vec![0.0; t_count];
    while sweeps < settings.max_sweeps {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            if h[j].iter().all(|&v| v == 0.0) {
                continue;
            }
            let col = &cols[j];
            for t in 0..t_count {
                z[t] = col.iter().zip(&r[t]).map(|(a, b)| a * b).sum::<f64>() / nf + h[j][t] * w[j][t];
                c[t] = if h[j][t] > 0.0 { h[j][t] + l2 } else { 0.0 };
            }
            let new = group_prox(&z, &c, l1);
            for t in 0..t_count {
                let delta = new[t] - w[j][t];
                if delta != 0.0 {
                    for i in 0..n {
                        if mask[t][i] {
                            r[t][i] -= delta * col[i];
                        }
                    }
                    w[j][t] = new[t];
                    max_delta = max_delta.max(delta.abs());
                }
            }
        }
        for t in 0..t_count {
            if observed[t] == 0 {
                continue;
            }
            let shift = r[t].iter().sum::<f64>() / observed[t] as f64;
            if shift != 0.0 {
                b[t] += shift;
                for i in 0..n {
                    if mask[t][i] {
                        r[t][i] -= shift;
                    }
                }
                max_delta = max_delta.max(shift.abs());
            }
        }
        if !max_delta.is_finite() {
            return Err(ModelError::NonFinite("multi-task coefficients".into()));
        }
        if max_delta < settings.tol {
            converged = true;
            break;
        }
    }
    Ok(LinearFit {
        coef: DMatrix::from_fn(d, t_count, |j, t| w[j][t]),
        intercept: DVector::from_vec(b),
        sweeps,
        converged,
    })
}

/// Evidence-approximation Bayesian ridge regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRidgeSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
}

impl Default for BayesRidgeSettings {
    fn default() -> Self {
        BayesRidgeSettings { max_iter: 300, tol: 1e-3, alpha_1: 1e-6, alpha_2: 1e-6, lambda_1: 1e-6, lambda_2: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRidgeFit {
    pub linear: LinearFit,
    /// Noise precision.
    pub alpha: f64,
    /// Weight precision.
    pub lambda: f64,
}

/// Alternates posterior-mean coefficients with fixed-point updates of the
/// noise and weight precisions until the relative coefficient change drops
/// below `tol`.
pub fn fit_bayesian_ridge(x: &DMatrix<f64>, y: &[f64], s: BayesRidgeSettings) -> Result<BayesRidgeFit, ModelError> {
    check_finite(x, y)?;
    let (n, d) = x.shape();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let y_mean = mean(y);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let var_y = yc.norm_squared() / nf;
    let constant_fit = |alpha, lambda| BayesRidgeFit {
        linear: LinearFit {
            coef: DMatrix::zeros(d, 1),
            intercept: DVector::from_element(1, y_mean),
            sweeps: 0,
            converged: true,
        },
        alpha,
        lambda,
    };
    if var_y == 0.0 || d == 0 {
        return Ok(constant_fit(f64::INFINITY, 1.0));
    }
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - x_mean[j]);
    let f = svd(&xc);
    let (u, sv) = (&f.u, &f.s);
    let v_t = f.v.transpose();
    let eig: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let uty = u.transpose() * &yc;
    let mut alpha = 1.0 / (var_y + f64::EPSILON);
    let mut lambda = 1.0;
    let mut coef = DVector::zeros(d);
    let mut iters = 0;
    let mut converged = false;
    for it in 0..s.max_iter {
        iters = it + 1;
        let scaled = DVector::from_fn(sv.len(), |k, _| sv[k] / (eig[k] + lambda / alpha) * uty[k]);
        let new_coef = v_t.transpose() * scaled;
        let resid = &yc - &xc * &new_coef;
        let rss = resid.norm_squared();
        let gamma: f64 = eig.iter().map(|&e| alpha * e / (lambda + alpha * e)).sum();
        lambda = (gamma + 2.0 * s.lambda_1) / (new_coef.norm_squared() + 2.0 * s.lambda_2);
        alpha = (nf - gamma + 2.0 * s.alpha_1) / (rss + 2.0 * s.alpha_2);
        if !alpha.is_finite() || !lambda.is_finite() || new_coef.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("Bayesian ridge precisions".into()));
        }
        let change: f64 = (&new_coef - &coef).abs().sum();
        let size: f64 = new_coef.abs().sum();
        coef = new_coef;
        if it > 0 && change <= s.tol * size.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    // final posterior mean under the last precisions
    let scaled = DVector::from_fn(sv.len(), |k, _| sv[k] / (eig[k] + lambda / alpha) * uty[k]);
    let coef_final = v_t.transpose() * scaled;
    let coef = if coef_final.iter().all(|v| v.is_finite()) { coef_final } else { coef };
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(BayesRidgeFit {
        linear: LinearFit {
            coef: DMatrix::from_column_slice(d, 1, coef.as_slice()),
            intercept: DVector::from_element(1, intercept),
            sweeps: iters,
            converged,
        },
        alpha,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_row_slice(6, 2, &[1.0, 0.5, 2.0, -1.0, 3.0, 0.0, 4.0, 2.0, 5.0, 1.0, 6.0, -0.5]);
        let y = vec![1.0, 1.5, 4.2, 3.9, 6.1, 8.0];
        (x, y)
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let (x, y) = toy();
        let fit = fit_least_squares(&x, &y).unwrap();
        let mut xa = DMatrix::from_element(6, 3, 1.0);
        xa.view_mut((0, 0), (6, 2)).copy_from(&x);
        let yv = DVector::from_vec(y.clone());
        let beta = (xa.transpose() * &xa).lu().solve(&(xa.transpose() * yv)).unwrap();
        assert!((fit.coef[(0, 0)] - beta[0]).abs() < 1e-10);
        assert!((fit.coef[(1, 0)] - beta[1]).abs() < 1e-10);
        assert!((fit.intercept[0] - beta[2]).abs() < 1e-10);
    }

    #[test]
    fn heavy_penalty_gives_mean() {
        let (x, y) = toy();
        let fit = fit_elastic_net(&x, &y, 1000.0, 1.0, CdSettings::default(), None).unwrap();
        assert!(fit.coef.iter().all(|&v| v == 0.0));
        assert!((fit.intercept[0] - mean(&y)).abs() < 1e-12);
    }

    #[test]
    fn group_prox_equal_curvature_closed_form() {
        let u = group_prox(&[3.0, 4.0], &[2.0, 2.0], 1.0);
        // ‖z‖ = 5, s = (5 − 1)/2 = 2
        assert!((u[0] - 1.2).abs() < 1e-12 && (u[1] - 1.6).abs() < 1e-12);
        let u = group_prox(&[3.0, 4.0], &[1.0, 3.0], 1.0);
        let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
        // stationarity: c_t u_t + λ u_t/s = z_t
        assert!((1.0 * u[0] + u[0] / s - 3.0).abs() < 1e-10);
        assert!((3.0 * u[1] + u[1] / s - 4.0).abs() < 1e-10);
        assert_eq!(group_prox(&[0.3, 0.4], &[1.0, 1.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn bayes_ridge_constant_target() {
        let (x, _) = toy();
        let fit = fit_bayesian_ridge(&x, &[2.5; 6], BayesRidgeSettings::default()).unwrap();
        assert!(fit.linear.coef.iter().all(|&v| v == 0.0));
        assert_eq!(fit.linear.intercept[0], 2.5);
    }
}
