//! Small bridges between ndarray containers and nalgebra decompositions.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

pub(crate) fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

#[cfg(test)]
pub(crate) fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// descending; column `k` of the returned matrix belongs to value `k`.
pub(crate) fn sym_eig_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `(1 - gamma) * s + gamma * (tr s / d) * I`
pub fn shrink_covariance(s: &Array2<f64>, gamma: f64) -> Array2<f64> {
    let d = s.nrows();
    let nu = s.diag().sum() / d as f64;
    let mut out = s * (1.0 - gamma);
    for i in 0..d {
        out[[i, i]] += gamma * nu;
    }
    out
}

/// Analytic shrinkage intensity towards `nu * I` (`nu = tr(target) / d`):
/// `sum_ij var_ij / sum_ij (target_ij - nu * delta_ij)^2`, clipped to
/// `[0, 1]`. `var_ij` is the estimated variance of the entry.
pub(crate) fn shrinkage_intensity(target: &Array2<f64>, entry_var: &Array2<f64>) -> f64 {
    let d = target.nrows();
    let nu = target.diag().sum() / d as f64;
    let mut denom = 0.0;
    for ((i, j), &v) in target.indexed_iter() {
        let t = if i == j { v - nu } else { v };
        denom += t * t;
    }
    let num = entry_var.sum();
    if denom <= 0.0 {
        return 1.0;
    }
    (num / denom).clamp(0.0, 1.0)
}
