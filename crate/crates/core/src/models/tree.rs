//! CART regression trees with variance-reduction splits.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Flat node array; index 0 is the root. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let mut row = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = x[(i, j)];
                }
                self.predict_row(&row)
            })
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Number of split nodes using each feature.
    pub fn split_counts(&self, d: usize) -> Vec<usize> {
        let mut counts = vec![0; d];
        for n in &self.nodes {
            if let Node::Split { feature, .. } = n {
                counts[*feature] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeGrowth {
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    /// Features examined per split; `>= d` means all, in index order.
    pub max_features: usize,
}

/// Column-major copy of the design matrix for fast per-feature scans.
pub(crate) struct Columns {
    pub cols: Vec<Vec<f64>>,
}

impl Columns {
    pub fn new(x: &DMatrix<f64>) -> Self {
        Columns { cols: x.column_iter().map(|c| c.iter().copied().collect()).collect() }
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    position: usize,
    score: f64,
}

/// Grows a tree on `samples` (indices into `y`, repeats allowed for
/// bootstrap draws). `rng` is only consulted when `max_features < d`.
pub(crate) fn grow_tree(
    x: &Columns,
    y: &[f64],
    samples: Vec<usize>,
    growth: &TreeGrowth,
    mut rng: Option<&mut ChaCha8Rng>,
) -> RegressionTree {
    let mut nodes = Vec::new();
    let mut stack = vec![(samples, 0usize, usize::MAX, false)];
    let d = x.n_features();
    let mut order: Vec<usize> = (0..d).collect();
    let mut scratch: Vec<(f64, f64)> = Vec::new();
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
        let n = idx.len();
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let all_equal = idx.iter().all(|&i| y[i] == y[idx[0]]);
        let can_split = n >= growth.min_samples_split
            && n >= 2 * growth.min_samples_leaf.max(1)
            && !all_equal
            && growth.max_depth.is_none_or(|m| depth < m);
        let best = if can_split {
            best_split(x, y, &idx, mean, growth, &mut order, &mut scratch, rng.as_deref_mut())
        } else {
            None
        };
        match best {
            None => nodes.push(Node::Leaf { value: mean }),
            Some(c) => {
                let (mut left, mut right) = (Vec::with_capacity(c.position), Vec::with_capacity(n - c.position));
                for &i in &idx {
                    if x.cols[c.feature][i] <= c.threshold {
                        left.push(i);
                    } else {
                        right.push(i);
                    }
                }
                nodes.push(Node::Split { feature: c.feature, threshold: c.threshold, left: 0, right: 0 });
                // right pushed first so the left subtree is numbered first
                stack.push((right, depth + 1, id, true));
                stack.push((left, depth + 1, id, false));
            }
        }
    }
    RegressionTree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    x: &Columns,
    y: &[f64],
    idx: &[usize],
    mean: f64,
    growth: &TreeGrowth,
    order: &mut [usize],
    scratch: &mut Vec<(f64, f64)>,
    rng: Option<&mut ChaCha8Rng>,
) -> Option<Candidate> {
    let d = order.len();
    let subsample = growth.max_features < d;
    for (k, o) in order.iter_mut().enumerate() {
        *o = k;
    }
    if subsample {
        if let Some(r) = rng {
            order.shuffle(r);
        }
    }
    let n = idx.len();
    let leaf = growth.min_samples_leaf.max(1);
    let mut best: Option<Candidate> = None;
    let mut informative = 0;
    for &f in order.iter() {
        if subsample && informative >= growth.max_features && best.is_some() {
            break;
        }
        scratch.clear();
        scratch.extend(idx.iter().map(|&i| (x.cols[f][i], y[i] - mean)));
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        if scratch[0].0 == scratch[n - 1].0 {
            continue;
        }
        informative += 1;
        let total: f64 = scratch.iter().map(|p| p.1).sum();
        let mut left_sum = 0.0;
        for pos in 1..n {
            left_sum += scratch[pos - 1].1;
            if scratch[pos - 1].0 == scratch[pos].0 || pos < leaf || n - pos < leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / pos as f64 + right_sum * right_sum / (n - pos) as f64;
            if best.as_ref().is_none_or(|b| score > b.score) {
                let (lo, hi) = (scratch[pos - 1].0, scratch[pos].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate { feature: f, threshold, position: pos, score });
            }
        }
    }
    best.filter(|b| b.score > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> TreeGrowth {
        TreeGrowth { min_samples_leaf: 1, min_samples_split: 2, max_depth: None, max_features: usize::MAX }
    }

    #[test]
    fn step_split_at_midpoint() {
        let xs = [-3.5, -2.0, -1.0, -0.5, 0.5, 1.0, 2.5, 4.0];
        let x = DMatrix::from_row_slice(8, 1, &xs);
        let y: Vec<f64> = xs.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        let t = grow_tree(&Columns::new(&x), &y, (0..8).collect(), &full(), None);
        assert_eq!(t.nodes.len(), 3);
        match t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.0);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(t.predict(&x), y);
    }

    #[test]
    fn constant_target_single_leaf() {
        let x = DMatrix::from_fn(6, 2, |i, j| (i + j) as f64);
        let t = grow_tree(&Columns::new(&x), &[2.0; 6], (0..6).collect(), &full(), None);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 2.0 }]);
    }

    #[test]
    fn leaf_size_respected() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64);
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let g = TreeGrowth { min_samples_leaf: 4, ..full() };
        let t = grow_tree(&Columns::new(&x), &y, (0..10).collect(), &g, None);
        assert!(t.n_leaves() <= 2);
    }
}
