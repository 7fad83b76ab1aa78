//! Bit-set fingerprints, folding, Tanimoto similarity and MaxMin picking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint widths differ ({0:?} vs {1:?})")]
    WidthMismatch(Option<u32>, Option<u32>),
    #[error("bit {bit} does not fit width {width}")]
    BitOutOfRange { bit: u32, width: u32 },
    #[error("cannot pick {k} items from {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("fold width must be positive")]
    ZeroWidth,
}

/// Sorted, duplicate-free set of active bit indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fingerprint {
    bits: Vec<u32>,
    width: Option<u32>,
}

impl Fingerprint {
    /// Unfolded fingerprint from arbitrary bit indices.
    pub fn new(bits: impl IntoIterator<Item = u32>) -> Fingerprint {
        let mut bits: Vec<u32> = bits.into_iter().collect();
        bits.sort_unstable();
        bits.dedup();
        Fingerprint { bits, width: None }
    }

    pub fn with_width(bits: impl IntoIterator<Item = u32>, width: u32) -> Result<Fingerprint, FingerprintError> {
        let mut fp = Fingerprint::new(bits);
        if width == 0 {
            return Err(FingerprintError::ZeroWidth);
        }
        if let Some(&bit) = fp.bits.iter().find(|&&b| b >= width) {
            return Err(FingerprintError::BitOutOfRange { bit, width });
        }
        fp.width = Some(width);
        Ok(fp)
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    pub fn width(&self) -> Option<u32> {
        self.width
    }

    pub fn count(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, bit: u32) -> bool {
        self.bits.binary_search(&bit).is_ok()
    }

    /// Dense 0/1 vector of length `width` (unfolded prints use max bit + 1).
    pub fn to_dense(&self) -> Vec<f64> {
        let len = self.width.map(|w| w as usize).unwrap_or_else(|| self.bits.last().map_or(0, |&b| b as usize + 1));
        let mut v = vec![0.0; len];
        for &b in &self.bits {
            v[b as usize] = 1.0;
        }
        v
    }
}

pub fn fold_fingerprint(fp: &Fingerprint, width: u32) -> Result<Fingerprint, FingerprintError> {
    if width == 0 {
        return Err(FingerprintError::ZeroWidth);
    }
    let mut out = Fingerprint::new(fp.bits.iter().map(|b| b % width));
    out.width = Some(width);
    Ok(out)
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// |a ∩ b| / |a ∪ b|, with two empty prints counted as identical.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    let inter = intersection_size(&a.bits, &b.bits);
    let union = a.bits.len() + b.bits.len() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

fn check_widths(fps: &[Fingerprint]) -> Result<(), FingerprintError> {
    if let Some(first) = fps.first() {
        if let Some(other) = fps.iter().find(|f| f.width != first.width) {
            return Err(FingerprintError::WidthMismatch(first.width, other.width));
        }
    }
    Ok(())
}

/// Greedy MaxMin picking with the first index drawn from `seed`.
pub fn maxmin_diversity_pick(fps: &[Fingerprint], k: usize, seed: u64) -> Result<Vec<usize>, FingerprintError> {
    if k > fps.len() {
        return Err(FingerprintError::KTooLarge { k, n: fps.len() });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..fps.len());
    maxmin_diversity_pick_from(fps, k, first)
}

/// Greedy MaxMin picking starting from a given first index. Each next pick
/// maximizes the minimum Tanimoto distance to the picked set; ties go to the
/// lowest index.
pub fn maxmin_diversity_pick_from(
    fps: &[Fingerprint],
    k: usize,
    first: usize,
) -> Result<Vec<usize>, FingerprintError> {
    if k > fps.len() {
        return Err(FingerprintError::KTooLarge { k, n: fps.len() });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    check_widths(fps)?;
    let n = fps.len();
    let mut picked = vec![first];
    let mut is_picked = vec![false; n];
    is_picked[first] = true;
    let mut min_dist = vec![f64::INFINITY; n];
    let mut last = first;
    while picked.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if is_picked[i] {
                continue;
            }
            let d = 1.0 - tanimoto(&fps[i], &fps[last])?;
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if best.is_none_or(|(_, bd)| min_dist[i] > bd) {
                best = Some((i, min_dist[i]));
            }
        }
        let (next, _) = best.expect("unpicked candidates remain");
        picked.push(next);
        is_picked[next] = true;
        last = next;
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let f = fold_fingerprint(&Fingerprint::new([3, 2003, 4005]), 2000).unwrap();
        assert_eq!(f.bits(), &[3, 5]);
        assert_eq!(f.width(), Some(2000));
        assert!(fold_fingerprint(&Fingerprint::new([]), 2000).unwrap().is_empty());
        assert_eq!(fold_fingerprint(&Fingerprint::new([1999]), 2000).unwrap().bits(), &[1999]);
    }

    #[test]
    fn similarity() {
        let a = Fingerprint::new([1, 2, 3]);
        let b = Fingerprint::new([2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &Fingerprint::new([7, 8])).unwrap(), 0.0);
        assert_eq!(tanimoto(&Fingerprint::default(), &Fingerprint::default()).unwrap(), 1.0);
        let folded = fold_fingerprint(&a, 2000).unwrap();
        assert!(matches!(tanimoto(&a, &folded), Err(FingerprintError::WidthMismatch(..))));
    }

    #[test]
    fn picking() {
        let fps = vec![Fingerprint::new([1, 2]), Fingerprint::new([1, 2]), Fingerprint::new([5, 6])];
        assert_eq!(maxmin_diversity_pick_from(&fps, 2, 0).unwrap(), vec![0, 2]);
        let mut all = maxmin_diversity_pick(&fps, 3, 9).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(matches!(maxmin_diversity_pick(&fps, 4, 0), Err(FingerprintError::KTooLarge { .. })));
        assert_eq!(maxmin_diversity_pick(&fps, 2, 17).unwrap(), maxmin_diversity_pick(&fps, 2, 17).unwrap());
    }

    #[test]
    fn bad_width() {
        assert!(Fingerprint::with_width([2000], 2000).is_err());
        assert_eq!(Fingerprint::with_width([5, 1, 5], 10).unwrap().bits(), &[1, 5]);
    }
}
