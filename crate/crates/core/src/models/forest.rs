//! Random forest: bagged CART trees with per-split feature subsampling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Columns, RegressionTree, TreeGrowth};
use super::{derive_seed, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestFit {
    pub trees: Vec<RegressionTree>,
}

impl ForestFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = vec![0.0; x.nrows()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict(x)) {
                *o += p;
            }
        }
        let k = self.trees.len().max(1) as f64;
        DMatrix::from_fn(x.nrows(), 1, |i, _| out[i] / k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestSettings {
    pub n_estimators: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Fraction of features tried per split; ⌈fraction·d⌉ clamped to [1, d].
    pub max_features: f64,
    pub bootstrap: bool,
}

pub fn features_per_split(fraction: f64, d: usize) -> usize {
    ((fraction * d as f64).ceil() as usize).clamp(1, d.max(1))
}

pub fn fit_random_forest(x: &DMatrix<f64>, y: &[f64], s: &ForestSettings, seed: u64) -> Result<ForestFit, ModelError> {
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if s.n_estimators == 0 || !(s.max_features > 0.0 && s.max_features <= 1.0) {
        return Err(ModelError::InvalidHyperparameter(format!(
            "n_estimators={}, max_features={}",
            s.n_estimators, s.max_features
        )));
    }
    let cols = Columns::new(x);
    let growth = TreeGrowth {
        min_samples_leaf: s.min_samples_leaf,
        min_samples_split: s.min_samples_split,
        max_depth: None,
        max_features: features_per_split(s.max_features, x.ncols()),
    };
    let trees = (0..s.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[t as u64]));
            let samples = if s.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            grow_tree(&cols, y, samples, &growth, Some(&mut rng))
        })
        .collect();
    Ok(ForestFit { trees })
}
