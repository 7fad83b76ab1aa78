//! Planted-linear synthetic datasets for desk-scale testing.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{split_folds, DataError, DescriptorTable, FoldAssignment, ModelData};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub table: DescriptorTable,
    /// n × T target matrix, rows aligned with `table`.
    pub targets: DMatrix<f64>,
    pub target_names: Vec<String>,
    /// d × T planted weights.
    pub weights: DMatrix<f64>,
    pub folds: FoldAssignment,
}

impl SynthDataset {
    pub fn model_data(&self) -> ModelData {
        ModelData::assemble(&self.table, &self.table.compound_ids, self.target_names.clone(), &self.targets, &self.folds)
            .expect("synthetic parts are aligned")
    }
}

/// Standard-normal features; targets are `X·W + noise` where the columns
/// of `W` share a common direction plus a smaller task-specific part, so
/// tasks are correlated.
pub fn synth_dataset(
    seed: u64,
    n_compounds: usize,
    n_features: usize,
    n_targets: usize,
    noise_sd: f64,
) -> Result<SynthDataset, DataError> {
    if n_compounds == 0 || n_features == 0 || n_targets == 0 {
        return Err(DataError::Invalid("synthetic dataset sizes must be positive".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(DataError::Invalid("noise_sd must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DMatrix::from_fn(n_compounds, n_features, |_, _| draw());
    let shared: Vec<f64> = (0..n_features).map(|_| draw()).collect();
    let weights = DMatrix::from_fn(n_features, n_targets, |j, _| shared[j]);
    let specific = DMatrix::from_fn(n_features, n_targets, |_, _| draw());
    let weights = weights + specific * 0.5;
    let mut targets = &x * &weights;
    if noise_sd > 0.0 {
        let noise = Normal::new(0.0, noise_sd).expect("valid sd");
        for v in targets.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    let ids: Vec<String> = (0..n_compounds).map(|i| format!("S{i:04}")).collect();
    let names: Vec<String> = (0..n_features).map(|j| format!("f{j:03}")).collect();
    let mut table = DescriptorTable::dense("synthetic", ids.clone(), names, x)?;
    let folds = if n_compounds >= 5 {
        split_folds(&ids, seed ^ 0x5eed_f01d)?
    } else {
        FoldAssignment::from_pairs(ids.iter().enumerate().map(|(i, id)| (id.clone(), i as i64)))?
    };
    table.folds = ids.iter().map(|id| folds.fold_of(id)).collect();
    Ok(SynthDataset {
        table,
        targets,
        target_names: (0..n_targets).map(|k| format!("T{k}")).collect(),
        weights,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let a = synth_dataset(3, 40, 5, 6, 0.1).unwrap();
        let b = synth_dataset(3, 40, 5, 6, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.targets.ncols(), 6);
        assert_ne!(a, synth_dataset(4, 40, 5, 6, 0.1).unwrap());
    }

    #[test]
    fn noiseless_ols_recovers_weights() {
        let s = synth_dataset(11, 60, 7, 2, 0.0).unwrap();
        let x = &s.table.x;
        let w = (x.transpose() * x).lu().solve(&(x.transpose() * &s.targets)).unwrap();
        assert!((w - &s.weights).amax() < 1e-8);
    }
}
