//! The nine regression model classes behind one fit/predict contract.
//!
//! Every class accepts an n×T target matrix with NaN marking missing cells.
//! Single-task classes require T = 1 and drop rows whose target is missing.
//! Inputs are standardized with statistics of the training rows unless the
//! spec disables it; the statistics travel with the fitted model.

pub mod forest;
pub mod gbt;
pub mod linear;
pub mod mlp;
pub mod pls;
pub mod svr;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::NormalizationStats;

pub use forest::{features_per_split, fit_random_forest, ForestFit, ForestSettings};
pub use gbt::{fit_gbt, leaf_weight, split_gain, GbtFit, GbtSettings};
pub use linear::{
    elastic_net_objective, fit_bayesian_ridge, fit_elastic_net, fit_least_squares, fit_multitask_elastic_net,
    multitask_objective, BayesRidgeFit, BayesRidgeSettings, CdSettings, LinearFit,
};
pub use mlp::{fit_mlp, MlpFit, MlpSettings, Network};
pub use pls::{fit_pls, PlsFit};
pub use svr::{fit_svr, Gamma, Kernel, SvrFit, SvrSettings};
pub use tree::{Node, RegressionTree};

pub const MODEL_FORMAT: &str = "pampa-qspr-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("latent direction collapsed (rank deficient input)")]
    RankDeficient,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("no training rows with observed targets")]
    EmptyTrainingSet,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} is single-task; got a multi-column target")]
    MultiTaskUnsupported(ModelClass),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelClass {
    #[serde(rename = "DTR")]
    Dtr,
    #[serde(rename = "RFR")]
    Rfr,
    #[serde(rename = "EN")]
    En,
    #[serde(rename = "MTEN")]
    Mten,
    #[serde(rename = "BayesRidge")]
    BayesRidge,
    #[serde(rename = "PLS")]
    Pls,
    #[serde(rename = "SVR")]
    Svr,
    #[serde(rename = "GBT")]
    Gbt,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ModelClass {
    pub const ALL: [ModelClass; 9] = [
        ModelClass::Dtr,
        ModelClass::Rfr,
        ModelClass::En,
        ModelClass::Mten,
        ModelClass::BayesRidge,
        ModelClass::Pls,
        ModelClass::Svr,
        ModelClass::Gbt,
        ModelClass::Mlp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelClass::Dtr => "DTR",
            ModelClass::Rfr => "RFR",
            ModelClass::En => "EN",
            ModelClass::Mten => "MTEN",
            ModelClass::BayesRidge => "BayesRidge",
            ModelClass::Pls => "PLS",
            ModelClass::Svr => "SVR",
            ModelClass::Gbt => "GBT",
            ModelClass::Mlp => "MLP",
        }
    }

    pub fn supports_multitask(self) -> bool {
        matches!(self, ModelClass::Mten | ModelClass::Pls | ModelClass::Gbt | ModelClass::Mlp)
    }

    pub fn supports_single_task(self) -> bool {
        self != ModelClass::Mten
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let class = match key.as_str() {
            "dtr" | "tree" | "decision_tree" => ModelClass::Dtr,
            "rfr" | "rf" | "random_forest" => ModelClass::Rfr,
            "en" | "elastic_net" | "elasticnet" => ModelClass::En,
            "mten" | "multitask_elastic_net" => ModelClass::Mten,
            "bayesridge" | "bayes_ridge" | "bayesian_ridge" => ModelClass::BayesRidge,
            "pls" => ModelClass::Pls,
            "svr" => ModelClass::Svr,
            "gbt" | "xgb" | "xgboost" => ModelClass::Gbt,
            "mlp" => ModelClass::Mlp,
            _ => return Err(ModelError::InvalidHyperparameter(format!("unknown model class {s:?}"))),
        };
        Ok(class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_features: f64,
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetParams {
    pub alpha: f64,
    pub l1_ratio: f64,
    #[serde(default = "default_cd_tol")]
    pub tol: f64,
    #[serde(default = "default_cd_sweeps")]
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsParams {
    pub n_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub gamma: Gamma,
    pub c: f64,
    pub epsilon: f64,
    #[serde(default = "default_svr_tol")]
    pub tol: f64,
    #[serde(default = "default_svr_iter")]
    pub max_iter_factor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub subsample: f64,
    #[serde(default = "default_eta")]
    pub learning_rate: f64,
    #[serde(default = "one")]
    pub min_child_weight: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub dropout: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn default_cd_tol() -> f64 {
    1e-6
}
fn default_cd_sweeps() -> usize {
    10_000
}
fn default_svr_tol() -> f64 {
    1e-3
}
fn default_svr_iter() -> usize {
    100
}
fn default_eta() -> f64 {
    0.3
}
fn default_epochs() -> usize {
    200
}
fn default_patience() -> usize {
    20
}
fn default_batch() -> usize {
    32
}

impl ElasticNetParams {
    pub fn new(alpha: f64, l1_ratio: f64) -> Self {
        ElasticNetParams { alpha, l1_ratio, tol: default_cd_tol(), max_sweeps: default_cd_sweeps() }
    }
}

impl SvrParams {
    pub fn new(kernel: Kernel, gamma: Gamma, c: f64, epsilon: f64) -> Self {
        SvrParams { kernel, gamma, c, epsilon, tol: default_svr_tol(), max_iter_factor: default_svr_iter() }
    }
}

impl GbtParams {
    pub fn new(n_estimators: usize, max_depth: usize, lambda: f64, alpha: f64, subsample: f64) -> Self {
        GbtParams {
            n_estimators,
            max_depth,
            lambda,
            alpha,
            subsample,
            learning_rate: default_eta(),
            min_child_weight: 1.0,
            gamma: 0.0,
        }
    }
}

impl MlpParams {
    pub fn new(hidden_sizes: Vec<usize>, dropout: f64, weight_decay: f64, learning_rate: f64) -> Self {
        MlpParams {
            hidden_sizes,
            dropout,
            weight_decay,
            learning_rate,
            max_epochs: default_epochs(),
            patience: default_patience(),
            batch_size: default_batch(),
        }
    }
}

/// Hyperparameters of one model class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum ModelParams {
    #[serde(rename = "DTR")]
    Dtr(TreeParams),
    #[serde(rename = "RFR")]
    Rfr(ForestParams),
    #[serde(rename = "EN")]
    En(ElasticNetParams),
    #[serde(rename = "MTEN")]
    Mten(ElasticNetParams),
    #[serde(rename = "BayesRidge")]
    BayesRidge(BayesRidgeSettings),
    #[serde(rename = "PLS")]
    Pls(PlsParams),
    #[serde(rename = "SVR")]
    Svr(SvrParams),
    #[serde(rename = "GBT")]
    Gbt(GbtParams),
    #[serde(rename = "MLP")]
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn class(&self) -> ModelClass {
        match self {
            ModelParams::Dtr(_) => ModelClass::Dtr,
            ModelParams::Rfr(_) => ModelClass::Rfr,
            ModelParams::En(_) => ModelClass::En,
            ModelParams::Mten(_) => ModelClass::Mten,
            ModelParams::BayesRidge(_) => ModelClass::BayesRidge,
            ModelParams::Pls(_) => ModelClass::Pls,
            ModelParams::Svr(_) => ModelClass::Svr,
            ModelParams::Gbt(_) => ModelClass::Gbt,
            ModelParams::Mlp(_) => ModelClass::Mlp,
        }
    }

    /// Compact `key=value` rendering of the grid-relevant hyperparameters.
    pub fn describe(&self) -> String {
        match self {
            ModelParams::Dtr(p) => format!("min_samples_leaf={};min_samples_split={}", p.min_samples_leaf, p.min_samples_split),
            ModelParams::Rfr(p) => format!(
                "n_estimators={};min_samples_leaf={};min_samples_split={};max_features={}",
                p.n_estimators, p.min_samples_leaf, p.min_samples_split, p.max_features
            ),
            ModelParams::En(p) | ModelParams::Mten(p) => format!("alpha={};l1_ratio={}", p.alpha, p.l1_ratio),
            ModelParams::BayesRidge(_) => String::new(),
            ModelParams::Pls(p) => format!("n_components={}", p.n_components),
            ModelParams::Svr(p) => {
                let gamma = match p.gamma {
                    Gamma::Scale => "scale".to_string(),
                    Gamma::Auto => "auto".to_string(),
                    Gamma::Value(g) => g.to_string(),
                };
                format!("kernel={};gamma={};C={};epsilon={}", p.kernel.label(), gamma, p.c, p.epsilon)
            }
            ModelParams::Gbt(p) => format!(
                "n_estimators={};max_depth={};lambda={};alpha={};subsample={}",
                p.n_estimators, p.max_depth, p.lambda, p.alpha, p.subsample
            ),
            ModelParams::Mlp(p) => {
                let hidden: Vec<String> = p.hidden_sizes.iter().map(|h| h.to_string()).collect();
                format!(
                    "hidden_sizes=[{}];dropout={};weight_decay={};learning_rate={}",
                    hidden.join(","),
                    p.dropout,
                    p.weight_decay,
                    p.learning_rate
                )
            }
        }
    }

    /// Lexicographic complexity key used to break selection ties: smaller
    /// means simpler. `d` features, `t` targets.
    pub fn complexity(&self, d: usize, t: usize) -> Vec<f64> {
        match self {
            ModelParams::Dtr(p) => vec![-(p.min_samples_leaf as f64), -(p.min_samples_split as f64)],
            ModelParams::Rfr(p) => vec![
                p.max_features,
                -(p.min_samples_leaf as f64),
                -(p.min_samples_split as f64),
                p.n_estimators as f64,
            ],
            ModelParams::En(p) | ModelParams::Mten(p) => vec![-p.alpha, -p.l1_ratio],
            ModelParams::BayesRidge(_) => vec![0.0],
            ModelParams::Pls(p) => vec![p.n_components as f64],
            ModelParams::Svr(p) => {
                let k = match p.kernel {
                    Kernel::Linear => 0.0,
                    Kernel::Poly { degree } => degree as f64,
                    Kernel::Rbf => 4.0,
                    Kernel::Sigmoid => 5.0,
                };
                vec![k, p.c, -p.epsilon]
            }
            ModelParams::Gbt(p) => vec![
                (p.n_estimators * p.max_depth) as f64,
                -p.lambda,
                -p.alpha,
                p.subsample,
            ],
            ModelParams::Mlp(p) => {
                let mut sizes = vec![d];
                sizes.extend(&p.hidden_sizes);
                sizes.push(t);
                let weights: usize = sizes.windows(2).map(|w| w[0] * w[1]).sum();
                vec![weights as f64, -p.weight_decay, p.dropout, p.learning_rate]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub params: ModelParams,
    pub seed: u64,
    #[serde(default = "yes")]
    pub standardize_inputs: bool,
}

impl RegressorSpec {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        RegressorSpec { params, seed, standardize_inputs: true }
    }

    pub fn raw_inputs(mut self) -> Self {
        self.standardize_inputs = false;
        self
    }

    pub fn class(&self) -> ModelClass {
        self.params.class()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Tree(RegressionTree),
    Forest(ForestFit),
    Linear(LinearFit),
    BayesRidge(BayesRidgeFit),
    Pls(PlsFit),
    Svr(SvrFit),
    Gbt(GbtFit),
    Mlp(MlpFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub spec: RegressorSpec,
    pub n_features: usize,
    pub n_targets: usize,
    pub input_stats: Option<NormalizationStats>,
    pub fitted: Fitted,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into an independent stream seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x51_7cc1_b727_220a))))
}

fn observed_column(y: &DMatrix<f64>) -> Vec<usize> {
    (0..y.nrows()).filter(|&i| !y[(i, 0)].is_nan()).collect()
}

fn take_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

impl TrainedModel {
    /// Fits `spec` on `x` (n×d) and `y` (n×T, NaN = missing). `monitor` is a
    /// held-out set used only for MLP early stopping.
    pub fn fit(
        spec: &RegressorSpec,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        monitor: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    ) -> Result<TrainedModel, ModelError> {
        let (n, d) = x.shape();
        let t = y.ncols();
        if y.nrows() != n {
            return Err(ModelError::DimensionMismatch { expected: n, got: y.nrows() });
        }
        if t == 0 {
            return Err(ModelError::DimensionMismatch { expected: 1, got: 0 });
        }
        if x.iter().any(|v| v.is_infinite()) || y.iter().any(|v| v.is_infinite()) {
            return Err(ModelError::NonFinite("training data".into()));
        }
        let class = spec.class();
        if t > 1 && !class.supports_multitask() {
            return Err(ModelError::MultiTaskUnsupported(class));
        }
        let input_stats = if spec.standardize_inputs {
            let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
            let rows: Vec<usize> = (0..n).collect();
            Some(NormalizationStats::fit_lenient(x, &names, &rows))
        } else {
            if x.iter().any(|v| v.is_nan()) {
                return Err(ModelError::NonFinite("missing inputs require standardization".into()));
            }
            None
        };
        let xs = match &input_stats {
            Some(s) => s.apply(x).map_err(|e| ModelError::Numerical(e.to_string()))?,
            None => x.clone(),
        };
        let single = || -> Result<(DMatrix<f64>, Vec<f64>), ModelError> {
            let rows = observed_column(y);
            if rows.is_empty() {
                return Err(ModelError::EmptyTrainingSet);
            }
            Ok((take_rows(&xs, &rows), rows.iter().map(|&i| y[(i, 0)]).collect()))
        };
        let seed = spec.seed;
        let fitted = match &spec.params {
            ModelParams::Dtr(p) => {
                let (xo, yo) = single()?;
                let growth = tree::TreeGrowth {
                    min_samples_leaf: p.min_samples_leaf,
                    min_samples_split: p.min_samples_split,
                    max_depth: p.max_depth,
                    max_features: usize::MAX,
                };
                let n_rows = xo.nrows();
                Fitted::Tree(tree::grow_tree(&tree::Columns::new(&xo), &yo, (0..n_rows).collect(), &growth, None))
            }
            ModelParams::Rfr(p) => {
                let (xo, yo) = single()?;
                let s = ForestSettings {
                    n_estimators: p.n_estimators,
                    min_samples_leaf: p.min_samples_leaf,
                    min_samples_split: p.min_samples_split,
                    max_features: p.max_features,
                    bootstrap: p.bootstrap,
                };
                Fitted::Forest(fit_random_forest(&xo, &yo, &s, seed)?)
            }
            ModelParams::En(p) => {
                let (xo, yo) = single()?;
                let s = CdSettings { tol: p.tol, max_sweeps: p.max_sweeps };
                Fitted::Linear(fit_elastic_net(&xo, &yo, p.alpha, p.l1_ratio, s, None)?)
            }
            ModelParams::Mten(p) => {
                let s = CdSettings { tol: p.tol, max_sweeps: p.max_sweeps };
                Fitted::Linear(fit_multitask_elastic_net(&xs, y, p.alpha, p.l1_ratio, s)?)
            }
            ModelParams::BayesRidge(s) => {
                let (xo, yo) = single()?;
                Fitted::BayesRidge(fit_bayesian_ridge(&xo, &yo, *s)?)
            }
            ModelParams::Pls(p) => Fitted::Pls(fit_pls(&xs, y, p.n_components)?),
            ModelParams::Svr(p) => {
                let (xo, yo) = single()?;
                let s = SvrSettings {
                    kernel: p.kernel,
                    gamma: p.gamma,
                    c: p.c,
                    epsilon: p.epsilon,
                    tol: p.tol,
                    max_iter_factor: p.max_iter_factor,
                };
                let fit = fit_svr(&xo, &yo, &s)?;
                if !fit.converged {
                    log::warn!(
                        "SVR stopped after {} iterations with KKT gap {:.3e} ({})",
                        fit.iterations,
                        fit.final_gap,
                        spec.params.describe()
                    );
                }
                Fitted::Svr(fit)
            }
            ModelParams::Gbt(p) => {
                let s = GbtSettings {
                    n_estimators: p.n_estimators,
                    max_depth: p.max_depth,
                    lambda: p.lambda,
                    alpha: p.alpha,
                    subsample: p.subsample,
                    learning_rate: p.learning_rate,
                    min_child_weight: p.min_child_weight,
                    gamma: p.gamma,
                };
                Fitted::Gbt(fit_gbt(&xs, y, &s, seed)?)
            }
            ModelParams::Mlp(p) => {
                let s = MlpSettings {
                    hidden_sizes: p.hidden_sizes.clone(),
                    dropout: p.dropout,
                    weight_decay: p.weight_decay,
                    learning_rate: p.learning_rate,
                    max_epochs: p.max_epochs,
                    patience: p.patience,
                    batch_size: p.batch_size,
                };
                let monitor_scaled = match (monitor, &input_stats) {
                    (Some((mx, my)), Some(stats)) => {
                        Some((stats.apply(mx).map_err(|e| ModelError::Numerical(e.to_string()))?, my.clone()))
                    }
                    (Some((mx, my)), None) => Some((mx.clone(), my.clone())),
                    (None, _) => None,
                };
                let mon = monitor_scaled.as_ref().map(|(a, b)| (a, b));
                Fitted::Mlp(fit_mlp(&xs, y, &s, seed, mon)?)
            }
        };
        Ok(TrainedModel {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            spec: spec.clone(),
            n_features: d,
            n_targets: t,
            input_stats,
            fitted,
        })
    }

    /// n×T predictions.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, ModelError> {
        if x.ncols() != self.n_features {
            return Err(ModelError::DimensionMismatch { expected: self.n_features, got: x.ncols() });
        }
        let xs = match &self.input_stats {
            Some(s) => s.apply(x).map_err(|e| ModelError::Numerical(e.to_string()))?,
            None => {
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::NonFinite("prediction input".into()));
                }
                x.clone()
            }
        };
        let out = match &self.fitted {
            Fitted::Tree(t) => DMatrix::from_vec(x.nrows(), 1, t.predict(&xs)),
            Fitted::Forest(f) => f.predict(&xs),
            Fitted::Linear(l) => l.predict(&xs),
            Fitted::BayesRidge(b) => b.linear.predict(&xs),
            Fitted::Pls(p) => p.predict(&xs),
            Fitted::Svr(s) => s.predict(&xs),
            Fitted::Gbt(g) => g.predict(&xs),
            Fitted::Mlp(m) => m.predict(&xs),
        };
        Ok(out)
    }

    pub fn class(&self) -> ModelClass {
        self.spec.class()
    }

    /// False when an iterative solver hit its iteration cap.
    pub fn converged(&self) -> bool {
        match &self.fitted {
            Fitted::Linear(l) => l.converged,
            Fitted::BayesRidge(b) => b.linear.converged,
            Fitted::Svr(s) => s.converged,
            _ => true,
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(|e| ModelError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ModelError> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("unexpected format tag {:?}", m.format)));
        }
        if m.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", m.version)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_labels_round_trip() {
        for c in ModelClass::ALL {
            assert_eq!(c.label().parse::<ModelClass>().unwrap(), c);
        }
    }

    #[test]
    fn multitask_rejected_for_single_task_class() {
        let x = DMatrix::from_fn(6, 2, |i, j| (i * 3 + j) as f64);
        let y = DMatrix::from_fn(6, 2, |i, j| (i + j) as f64);
        let spec = RegressorSpec::new(ModelParams::En(ElasticNetParams::new(0.1, 0.5)), 0);
        assert_eq!(TrainedModel::fit(&spec, &x, &y, None), Err(ModelError::MultiTaskUnsupported(ModelClass::En)));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let x = DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 5) % 11) as f64 / 3.0);
        let y = DMatrix::from_fn(12, 1, |i, _| (i as f64).sin());
        let spec = RegressorSpec::new(ModelParams::Rfr(ForestParams {
            n_estimators: 5,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: 0.4,
            bootstrap: true,
        }), 9);
        let m = TrainedModel::fit(&spec, &x, &y, None).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }
}
