//! Fully connected ReLU network with linear per-task heads, trained by
//! minibatch SGD on a masked mean-squared error.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major n_out × n_in.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

impl Network {
    /// Weights and biases drawn from U(−1/√fan_in, 1/√fan_in).
    pub fn new(n_in: usize, hidden: &[usize], n_out: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(n_out);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0].max(1) as f64).sqrt();
                let mut draw = || rng.random_range(-bound..=bound);
                let weights = (0..w[0] * w[1]).map(|_| draw()).collect();
                let bias = (0..w[1]).map(|_| draw()).collect();
                Dense { n_in: w[0], n_out: w[1], w: weights, b: bias }
            })
            .collect();
        Network { layers }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn n_weights(&self) -> usize {
        self.layers.iter().map(|l| l.w.len()).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params(), "parameter vector length");
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    /// Forward pass storing every layer output in `acts` (acts[0] is the
    /// input). `masks[l]` scales hidden layer `l` when training with dropout.
    fn forward_into(&self, input: &[f64], masks: Option<&[Vec<f64>]>, acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.layers.len() + 1, Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(input);
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let (prev, rest) = acts.split_at_mut(li + 1);
            let a_in = &prev[li];
            let out = &mut rest[0];
            out.clear();
            for o in 0..l.n_out {
                let row = &l.w[o * l.n_in..(o + 1) * l.n_in];
                let mut z = l.b[o];
                for (w, a) in row.iter().zip(a_in) {
                    z += w * a;
                }
                if li < last {
                    z = z.max(0.0);
                    if let Some(m) = masks {
                        z *= m[li][o];
                    }
                }
                out.push(z);
            }
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward_into(input, None, &mut acts);
        acts.pop().unwrap()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let t = self.layers.last().map(|l| l.n_out).unwrap_or(0);
        let mut out = DMatrix::zeros(x.nrows(), t);
        let mut row = vec![0.0; x.ncols()];
        let mut acts = Vec::new();
        for i in 0..x.nrows() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            self.forward_into(&row, None, &mut acts);
            for (k, v) in acts.last().unwrap().iter().enumerate() {
                out[(i, k)] = *v;
            }
        }
        out
    }

    /// Masked MSE over observed cells plus (weight_decay/2)·ΣW² (biases not
    /// penalized), with its gradient in `params()` order. `masks[r]` are the
    /// dropout scale factors for row r, if any.
    fn batch_loss_and_grad(
        &self,
        rows: &[&[f64]],
        targets: &[&[f64]],
        masks: Option<&[Vec<Vec<f64>>]>,
        weight_decay: f64,
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n_obs = targets.iter().flat_map(|t| t.iter()).filter(|v| !v.is_nan()).count();
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |at, l| {
                let o = *at;
                *at += l.w.len() + l.b.len();
                Some(o)
            })
            .collect();
        let mut loss = 0.0;
        if n_obs > 0 {
            let scale = 1.0 / n_obs as f64;
            let mut acts = Vec::new();
            let mut delta: Vec<f64> = Vec::new();
            let mut next: Vec<f64> = Vec::new();
            for (r, (input, target)) in rows.iter().zip(targets).enumerate() {
                let m = masks.map(|m| m[r].as_slice());
                self.forward_into(input, m, &mut acts);
                let out = acts.last().unwrap();
                delta.clear();
                for (p, t) in out.iter().zip(target.iter()) {
                    if t.is_nan() {
                        delta.push(0.0);
                    } else {
                        let d = p - t;
                        loss += d * d * scale;
                        delta.push(2.0 * d * scale);
                    }
                }
                for li in (0..self.layers.len()).rev() {
                    let l = &self.layers[li];
                    let a_in = &acts[li];
                    let off = offsets[li];
                    for o in 0..l.n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        let g = &mut grad[off + o * l.n_in..off + (o + 1) * l.n_in];
                        for (gw, a) in g.iter_mut().zip(a_in) {
                            *gw += d * a;
                        }
                        grad[off + l.w.len() + o] += d;
                    }
                    if li == 0 {
                        break;
                    }
                    next.clear();
                    next.resize(l.n_in, 0.0);
                    for o in 0..l.n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for (nx, w) in next.iter_mut().zip(&l.w[o * l.n_in..(o + 1) * l.n_in]) {
                            *nx += d * w;
                        }
                    }
                    // back through ReLU and dropout of hidden layer li-1
                    for (k, nx) in next.iter_mut().enumerate() {
                        if a_in[k] <= 0.0 {
                            *nx = 0.0;
                        } else if let Some(m) = m {
                            *nx *= m[li - 1][k];
                        }
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        if weight_decay > 0.0 {
            for (li, l) in self.layers.iter().enumerate() {
                let off = offsets[li];
                for (k, w) in l.w.iter().enumerate() {
                    loss += 0.5 * weight_decay * w * w;
                    grad[off + k] += weight_decay * w;
                }
            }
        }
        loss
    }

    /// Loss and gradient on the full data without dropout.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, weight_decay: f64) -> (f64, Vec<f64>) {
        let xr = row_vectors(x);
        let yr = row_vectors(y);
        let rows: Vec<&[f64]> = xr.iter().map(Vec::as_slice).collect();
        let targets: Vec<&[f64]> = yr.iter().map(Vec::as_slice).collect();
        let mut grad = vec![0.0; self.n_params()];
        let loss = self.batch_loss_and_grad(&rows, &targets, None, weight_decay, &mut grad);
        (loss, grad)
    }
}

fn row_vectors(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSettings {
    pub hidden_sizes: Vec<usize>,
    /// Probability of dropping a hidden unit during training.
    pub dropout: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFit {
    pub network: Network,
    /// Per-task target standardization applied during training.
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Mean per-task training RMSE (standardized units) after each epoch.
    pub train_history: Vec<f64>,
    pub monitor_history: Vec<f64>,
}

impl MlpFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.network.predict(x);
        for (t, mut col) in out.column_iter_mut().enumerate() {
            col.iter_mut().for_each(|v| *v = *v * self.y_std[t] + self.y_mean[t]);
        }
        out
    }
}

/// Mean over tasks of the RMSE on observed cells; tasks with no
/// observations are skipped.
fn mean_task_rmse(pred: &DMatrix<f64>, y: &[Vec<f64>]) -> f64 {
    let t_count = pred.ncols();
    let mut total = 0.0;
    let mut tasks = 0;
    for t in 0..t_count {
        let (mut sse, mut c) = (0.0, 0);
        for (i, row) in y.iter().enumerate() {
            if !row[t].is_nan() {
                sse += (pred[(i, t)] - row[t]).powi(2);
                c += 1;
            }
        }
        if c > 0 {
            total += (sse / c as f64).sqrt();
            tasks += 1;
        }
    }
    if tasks == 0 {
        0.0
    } else {
        total / tasks as f64
    }
}

fn standardize_targets(y: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for col in y.column_iter() {
        let obs: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        if obs.is_empty() {
            means.push(0.0);
            stds.push(1.0);
            continue;
        }
        let m = obs.iter().sum::<f64>() / obs.len() as f64;
        let var = obs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / obs.len() as f64;
        means.push(m);
        stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }
    (means, stds)
}

fn scaled_rows(y: &DMatrix<f64>, mean: &[f64], std: &[f64]) -> Vec<Vec<f64>> {
    y.row_iter()
        .map(|r| r.iter().enumerate().map(|(t, v)| (v - mean[t]) / std[t]).collect())
        .collect()
}

pub fn fit_mlp(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    s: &MlpSettings,
    seed: u64,
    monitor: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
) -> Result<MlpFit, ModelError> {
    let (n, d) = x.shape();
    let t_count = y.ncols();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if y.nrows() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.nrows() });
    }
    if s.hidden_sizes.is_empty() || s.hidden_sizes.contains(&0) {
        return Err(ModelError::InvalidHyperparameter("at least one non-empty hidden layer required".into()));
    }
    if !(0.0..1.0).contains(&s.dropout) || s.learning_rate <= 0.0 || s.weight_decay < 0.0 || s.batch_size == 0 {
        return Err(ModelError::InvalidHyperparameter(format!("{s:?}")));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| v.is_infinite()) {
        return Err(ModelError::NonFinite("MLP input".into()));
    }
    let (y_mean, y_std) = standardize_targets(y);
    let xr = row_vectors(x);
    let yr = scaled_rows(y, &y_mean, &y_std);
    let monitor = match monitor {
        Some((mx, my)) => {
            if mx.ncols() != d || my.ncols() != t_count || mx.nrows() != my.nrows() {
                return Err(ModelError::DimensionMismatch { expected: d, got: mx.ncols() });
            }
            Some((mx, scaled_rows(my, &y_mean, &y_std)))
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(d, &s.hidden_sizes, t_count, rng.random());
    let keep = 1.0 - s.dropout;
    let mut grad = vec![0.0; net.n_params()];
    let mut params = net.params();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut since_best = 0;
    let mut train_history = Vec::new();
    let mut monitor_history = Vec::new();
    let mut epochs_run = 0;
    for epoch in 0..s.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(s.batch_size) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| xr[i].as_slice()).collect();
            let targets: Vec<&[f64]> = batch.iter().map(|&i| yr[i].as_slice()).collect();
            let masks: Option<Vec<Vec<Vec<f64>>>> = (s.dropout > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| {
                        s.hidden_sizes
                            .iter()
                            .map(|&h| (0..h).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
                            .collect()
                    })
                    .collect()
            });
            let loss = net.batch_loss_and_grad(&rows, &targets, masks.as_deref(), s.weight_decay, &mut grad);
            if !loss.is_finite() {
                return Err(ModelError::NonFinite(format!(
                    "MLP loss {loss} at epoch {epoch} (lr={}, hidden={:?})",
                    s.learning_rate, s.hidden_sizes
                )));
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= s.learning_rate * g;
            }
            net.set_params(&params);
        }
        epochs_run = epoch + 1;
        let train = mean_task_rmse(&net.predict(x), &yr);
        if !train.is_finite() {
            return Err(ModelError::NonFinite(format!("MLP training RMSE at epoch {epoch}")));
        }
        train_history.push(train);
        if let Some((mx, my)) = &monitor {
            let score = mean_task_rmse(&net.predict(mx), my);
            monitor_history.push(score);
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, params.clone(), epoch));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= s.patience {
                    break;
                }
            }
        }
    }
    let best_epoch = match best {
        Some((_, p, e)) => {
            net.set_params(&p);
            e
        }
        None => epochs_run.saturating_sub(1),
    };
    Ok(MlpFit { network: net, y_mean, y_std, epochs_run, best_epoch, train_history, monitor_history })
}
