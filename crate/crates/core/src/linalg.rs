//! One-sided Jacobi singular value decomposition.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(s) Vᵀ` with `s` in descending order.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    /// n × r; columns for zero singular values are zero.
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    /// d × r.
    pub v: DMatrix<f64>,
}

/// Orthogonalizes the columns of `a` by plane rotations. Returns the rotated
/// matrix `A·V` and the accumulated d × d orthogonal `V`.
pub(crate) fn jacobi_rotate(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, d) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(d, d);
    let tol = f64::EPSILON * n.max(1) as f64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..d {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Column norms of the rotated matrix in descending order, with the
/// original column index as tie-break.
pub(crate) fn sorted_norms(w: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let norms: Vec<f64> = (0..w.ncols()).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..w.ncols()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    (order, norms)
}

fn tall_svd(a: &DMatrix<f64>) -> Svd {
    let (n, d) = a.shape();
    let (w, v) = jacobi_rotate(a);
    let (order, norms) = sorted_norms(&w);
    let mut u = DMatrix::zeros(n, d);
    let mut vs = DMatrix::zeros(d, d);
    let mut s = DVector::zeros(d);
    for (r, &j) in order.iter().enumerate() {
        s[r] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(r, &(w.column(j) / norms[j]));
        }
        vs.set_column(r, &v.column(j));
    }
    Svd { u, s, v: vs }
}

pub(crate) fn svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() >= a.ncols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.transpose());
        Svd { u: t.v, s: t.s, v: t.u }
    }
}

impl Svd {
    /// Minimum-norm least-squares solution, treating singular values at or
    /// below `cutoff` as zero.
    pub fn solve(&self, b: &DVector<f64>, cutoff: f64) -> DVector<f64> {
        let utb = self.u.transpose() * b;
        let scaled = DVector::from_fn(self.s.len(), |k, _| if self.s[k] > cutoff { utb[k] / self.s[k] } else { 0.0 });
        &self.v * scaled
    }
}
