//! Second-order gradient boosted regression trees for squared loss.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Columns, Node, RegressionTree};
use super::{derive_seed, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtSettings {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub subsample: f64,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtFit {
    pub base_score: Vec<f64>,
    pub learning_rate: f64,
    /// `trees[t][round]` for target `t`.
    pub trees: Vec<Vec<RegressionTree>>,
    /// Training RMSE (observed cells, all targets) after each round.
    pub train_rmse: Vec<f64>,
}

impl GbtFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.base_score.len());
        for (t, trees) in self.trees.iter().enumerate() {
            let mut col = vec![self.base_score[t]; x.nrows()];
            for tree in trees {
                for (c, p) in col.iter_mut().zip(tree.predict(x)) {
                    *c += self.learning_rate * p;
                }
            }
            for (i, v) in col.into_iter().enumerate() {
                out[(i, t)] = v;
            }
        }
        out
    }
}

/// Regularized leaf weight −sign(G)·max(|G|−α, 0)/(H+λ).
pub fn leaf_weight(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    -g.signum() * (g.abs() - alpha).max(0.0) / denom
}

/// Split gain ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let term = |g: f64, h: f64| if h + lambda > 0.0 { g * g / (h + lambda) } else { 0.0 };
    0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - gamma
}

fn grow(cols: &Columns, grad: &[f64], hess: &[f64], rows: Vec<usize>, s: &GbtSettings) -> RegressionTree {
    let mut nodes = Vec::new();
    let mut stack = vec![(rows, 0usize, usize::MAX, false)];
    let mut scratch: Vec<(f64, usize)> = Vec::new();
    while let Some((idx, depth, parent, is_right)) = stack.pop() {
        let id = nodes.len();
        if parent != usize::MAX {
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                if is_right {
                    *right = id;
                } else {
                    *left = id;
                }
            }
        }
        let g: f64 = idx.iter().map(|&i| grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| hess[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        if depth < s.max_depth && idx.len() >= 2 {
            for (f, col) in cols.cols.iter().enumerate() {
                scratch.clear();
                scratch.extend(idx.iter().map(|&i| (col[i], i)));
                scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (mut gl, mut hl) = (0.0, 0.0);
                for pos in 1..scratch.len() {
                    let i = scratch[pos - 1].1;
                    gl += grad[i];
                    hl += hess[i];
                    if scratch[pos - 1].0 == scratch[pos].0 {
                        continue;
                    }
                    let (gr, hr) = (g - gl, h - hl);
                    if hl < s.min_child_weight || hr < s.min_child_weight {
                        continue;
                    }
                    let gain = split_gain(gl, hl, gr, hr, s.lambda, s.gamma);
                    if gain > 0.0 && best.is_none_or(|b| gain > b.0) {
                        let (lo, hi) = (scratch[pos - 1].0, scratch[pos].0);
                        let mut threshold = lo + (hi - lo) / 2.0;
                        if threshold >= hi {
                            threshold = lo;
                        }
                        best = Some((gain, f, threshold));
                    }
                }
            }
        }
        match best {
            None => nodes.push(Node::Leaf { value: leaf_weight(g, h, s.lambda, s.alpha) }),
            Some((_, feature, threshold)) => {
                let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| cols.cols[feature][i] <= threshold);
                nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
                stack.push((right, depth + 1, id, true));
                stack.push((left, depth + 1, id, false));
            }
        }
    }
    RegressionTree { nodes }
}

/// Fits one boosted ensemble per target column, sharing the row subsample of
/// each round. NaN targets contribute zero gradient and hessian.
pub fn fit_gbt(x: &DMatrix<f64>, y: &DMatrix<f64>, s: &GbtSettings, seed: u64) -> Result<GbtFit, ModelError> {
    let (n, t_count) = (x.nrows(), y.ncols());
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if y.nrows() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.nrows() });
    }
    if !(s.subsample > 0.0 && s.subsample <= 1.0) || s.lambda < 0.0 || s.alpha < 0.0 || s.max_depth == 0 {
        return Err(ModelError::InvalidHyperparameter(format!("{s:?}")));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| v.is_infinite()) {
        return Err(ModelError::NonFinite("GBT input".into()));
    }
    let cols = Columns::new(x);
    let base_score: Vec<f64> = (0..t_count)
        .map(|t| {
            let obs: Vec<f64> = y.column(t).iter().copied().filter(|v| !v.is_nan()).collect();
            if obs.is_empty() {
                0.0
            } else {
                obs.iter().sum::<f64>() / obs.len() as f64
            }
        })
        .collect();
    let mut pred: Vec<Vec<f64>> = base_score.iter().map(|&b| vec![b; n]).collect();
    let mut trees: Vec<Vec<RegressionTree>> = vec![Vec::with_capacity(s.n_estimators); t_count];
    let mut train_rmse = Vec::with_capacity(s.n_estimators);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for round in 0..s.n_estimators {
        let rows: Vec<usize> = if s.subsample < 1.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[round as u64]));
            (0..n).filter(|_| rng.random::<f64>() < s.subsample).collect()
        } else {
            (0..n).collect()
        };
        for t in 0..t_count {
            for i in 0..n {
                let yi = y[(i, t)];
                if yi.is_nan() {
                    grad[i] = 0.0;
                    hess[i] = 0.0;
                } else {
                    grad[i] = pred[t][i] - yi;
                    hess[i] = 1.0;
                }
            }
            let tree = if rows.is_empty() {
                RegressionTree { nodes: vec![Node::Leaf { value: 0.0 }] }
            } else {
                grow(&cols, &grad, &hess, rows.clone(), s)
            };
            let mut row = vec![0.0; x.ncols()];
            for (i, p) in pred[t].iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = cols.cols[j][i];
                }
                *p += s.learning_rate * tree.predict_row(&row);
            }
            trees[t].push(tree);
        }
        let (mut sse, mut count) = (0.0, 0usize);
        for t in 0..t_count {
            for i in 0..n {
                if !y[(i, t)].is_nan() {
                    sse += (pred[t][i] - y[(i, t)]).powi(2);
                    count += 1;
                }
            }
        }
        let rmse = if count > 0 { (sse / count as f64).sqrt() } else { 0.0 };
        if !rmse.is_finite() {
            return Err(ModelError::NonFinite(format!("GBT training loss at round {round}")));
        }
        train_rmse.push(rmse);
    }
    Ok(GbtFit { base_score, learning_rate: s.learning_rate, trees, train_rmse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> GbtSettings {
        GbtSettings {
            n_estimators: 1,
            max_depth: 1,
            lambda: 0.0,
            alpha: 0.0,
            subsample: 1.0,
            learning_rate: 1.0,
            min_child_weight: 1.0,
            gamma: 0.0,
        }
    }

    #[test]
    fn stump_fits_step() {
        let x = DMatrix::from_row_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = DMatrix::from_row_slice(6, 1, &[0.0, 0.0, 0.0, 5.0, 5.0, 5.0]);
        let fit = fit_gbt(&x, &y, &settings(), 0).unwrap();
        assert!((fit.predict(&x) - &y).amax() < 1e-12);
    }

    #[test]
    fn huge_alpha_keeps_base_score() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let y = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 6.0]);
        let s = GbtSettings { alpha: 1e6, n_estimators: 5, ..settings() };
        let fit = fit_gbt(&x, &y, &s, 0).unwrap();
        assert!(fit.predict(&x).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn leaf_weight_thresholds() {
        assert_eq!(leaf_weight(3.0, 1.0, 1.0, 1.0), -1.0);
        assert_eq!(leaf_weight(-0.5, 1.0, 0.0, 1.0), 0.0);
    }
}
