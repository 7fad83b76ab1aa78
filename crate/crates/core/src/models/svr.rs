//! Epsilon-support vector regression solved by SMO with second-order
//! working-set selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ModelError;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Kernel {
    Linear,
    Rbf,
    Sigmoid,
    Poly { degree: u32 },
}

impl Kernel {
    pub fn label(&self) -> String {
        match self {
            Kernel::Linear => "linear".into(),
            Kernel::Rbf => "rbf".into(),
            Kernel::Sigmoid => "sigmoid".into(),
            Kernel::Poly { degree } => format!("poly{degree}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    Scale,
    Auto,
    Value(f64),
}

impl Gamma {
    /// `scale` is 1/(d·Var(X)) over all entries, `auto` is 1/d.
    pub fn resolve(&self, x: &DMatrix<f64>) -> f64 {
        let d = x.ncols().max(1) as f64;
        match *self {
            Gamma::Auto => 1.0 / d,
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let n = x.len() as f64;
                if n == 0.0 {
                    return 1.0;
                }
                let mean = x.iter().sum::<f64>() / n;
                let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (d * var)
                } else {
                    1.0
                }
            }
        }
    }
}

fn kernel_value(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => dot(a, b),
        Kernel::Rbf => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * d2).exp()
        }
        Kernel::Sigmoid => (gamma * dot(a, b)).tanh(),
        Kernel::Poly { degree } => (gamma * dot(a, b)).powi(degree as i32),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrFit {
    pub kernel: Kernel,
    pub gamma: f64,
    /// Support vectors (rows) with their dual coefficients α − α*.
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at termination.
    pub final_gap: f64,
}

impl SvrFit {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * kernel_value(self.kernel, self.gamma, sv, row))
            .sum();
        s - self.rho
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let rows = rows_of(x);
        DMatrix::from_fn(x.nrows(), 1, |i, _| self.decision(&rows[i]))
    }
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrSettings {
    pub kernel: Kernel,
    pub gamma: Gamma,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    /// Iteration cap is `max_iter_factor · n`.
    pub max_iter_factor: usize,
}

/// Dual problem over 2n variables β: minimize ½βᵀQβ + pᵀβ subject to
/// yᵀβ = 0 and 0 ≤ β ≤ C, with y = (+1…, −1…), p = (ε − y, ε + y).
pub fn fit_svr(x: &DMatrix<f64>, y: &[f64], s: &SvrSettings) -> Result<SvrFit, ModelError> {
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.len() });
    }
    if !(s.c > 0.0) || !(s.epsilon >= 0.0) {
        return Err(ModelError::InvalidHyperparameter(format!("C={}, epsilon={}", s.c, s.epsilon)));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("SVR input".into()));
    }
    let gamma = s.gamma.resolve(x);
    let rows = rows_of(x);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel_value(s.kernel, gamma, &rows[i], &rows[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("kernel matrix".into()));
    }
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let base = |t: usize| t % n;
    let q = |a: usize, b: usize| sign(a) * sign(b) * k[base(a) * n + base(b)];
    let c = s.c;
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l).map(|t| if t < n { s.epsilon - y[t] } else { s.epsilon + y[t - n] }).collect();
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let max_iter = s.max_iter_factor.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        // working set selection (second order)
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if sign(t) > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !is_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            let qii = q(i, i);
            for t in 0..l {
                if sign(t) > 0.0 {
                    if !is_lower(alpha[t]) {
                        let grad_diff = gmax + grad[t];
                        if grad[t] >= gmax2 {
                            gmax2 = grad[t];
                        }
                        if grad_diff > 0.0 {
                            let quad = qii + q(t, t) - 2.0 * sign(i) * q(i, t);
                            let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                            if obj <= obj_min {
                                obj_min = obj;
                                j_sel = Some(t);
                            }
                        }
                    }
                } else if !is_upper(alpha[t]) {
                    let grad_diff = gmax - grad[t];
                    if -grad[t] >= gmax2 {
                        gmax2 = -grad[t];
                    }
                    if grad_diff > 0.0 {
                        let quad = qii + q(t, t) + 2.0 * sign(i) * q(i, t);
                        let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= obj_min {
                            obj_min = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gap >= s.tol => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        if sign(i) != sign(j) {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..l {
            grad[t] += q(i, t) * dai + q(j, t) * daj;
        }
    }

    // offset from free variables, or the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if is_upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        let coef = alpha[i] - alpha[i + n];
        if coef != 0.0 {
            support_vectors.push(rows[i].clone());
            dual_coef.push(coef);
        }
    }
    if !rho.is_finite() {
        return Err(ModelError::NonFinite("SVR offset".into()));
    }
    Ok(SvrFit {
        kernel: s.kernel,
        gamma,
        support_vectors,
        dual_coef,
        rho,
        iterations,
        converged,
        final_gap: gap.max(0.0),
    })
}
