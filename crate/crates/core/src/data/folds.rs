//! Five-fold compound partitions; fold 0 is the external test set.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

pub const N_FOLDS: u8 = 5;
pub const TEST_FOLD: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FoldAssignment {
    folds: BTreeMap<String, u8>,
}

impl FoldAssignment {
    pub fn from_pairs<I, S>(pairs: I) -> Result<FoldAssignment, DataError>
    where
        I: IntoIterator<Item = (S, i64)>,
        S: Into<String>,
    {
        let mut folds = BTreeMap::new();
        for (id, f) in pairs {
            let id = id.into();
            if !(0..N_FOLDS as i64).contains(&f) {
                return Err(DataError::BadFold { id, fold: f });
            }
            if folds.insert(id.clone(), f as u8).is_some() {
                return Err(DataError::DuplicateId(id));
            }
        }
        Ok(FoldAssignment { folds })
    }

    pub fn fold_of(&self, id: &str) -> Option<u8> {
        self.folds.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// Ids in a fold, sorted.
    pub fn ids_in(&self, fold: u8) -> Vec<String> {
        self.folds.iter().filter(|(_, &f)| f == fold).map(|(id, _)| id.clone()).collect()
    }

    pub fn sizes(&self) -> [usize; N_FOLDS as usize] {
        let mut s = [0; N_FOLDS as usize];
        for &f in self.folds.values() {
            s[f as usize] += 1;
        }
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.folds.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Seeded uniform shuffle, then round-robin into five folds.
pub fn split_folds(compound_ids: &[String], seed: u64) -> Result<FoldAssignment, DataError> {
    if compound_ids.len() < N_FOLDS as usize {
        return Err(DataError::TooFewCompounds { needed: N_FOLDS as usize, got: compound_ids.len() });
    }
    let mut ids = compound_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    FoldAssignment::from_pairs(ids.into_iter().enumerate().map(|(i, id)| (id, (i % N_FOLDS as usize) as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i:03}")).collect()
    }

    #[test]
    fn sizes_143() {
        let f = split_folds(&ids(143), 7).unwrap();
        let mut s = f.sizes().to_vec();
        s.sort();
        assert_eq!(s, vec![28, 28, 29, 29, 29]);
        assert_eq!(f, split_folds(&ids(143), 7).unwrap());
        assert_ne!(f, split_folds(&ids(143), 8).unwrap());
    }

    #[test]
    fn five_compounds() {
        assert_eq!(split_folds(&ids(5), 1).unwrap().sizes(), [1; 5]);
        assert!(matches!(split_folds(&ids(4), 1), Err(DataError::TooFewCompounds { .. })));
    }

    #[test]
    fn duplicate_and_range_checks() {
        assert!(FoldAssignment::from_pairs([("a", 0), ("a", 1)]).is_err());
        assert!(FoldAssignment::from_pairs([("a", 5)]).is_err());
    }
}
