//! Two-class LDA with covariance shrinkage towards a scaled identity.

use nalgebra::{Cholesky, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::config::Shrinkage;
use crate::linalg::{shrink_covariance, shrinkage_intensity, to_na};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RldaModel {
    pub w: Array1<f64>,
    pub b: f64,
    pub gamma: f64,
    /// `[mean of class 0, mean of class 1]`
    pub class_means: [Array1<f64>; 2],
    /// Pooled within-class covariance after shrinkage.
    pub pooled_cov: Array2<f64>,
}

/// Intensity for the pooled covariance of the class-centred rows `z`
/// (Schaefer-Strimmer / Blankertz form).
pub fn analytic_gamma(z: ArrayView2<'_, f64>) -> f64 {
    let (n, d) = z.dim();
    if n < 2 {
        return 1.0;
    }
    let nf = n as f64;
    let s = z.t().dot(&z) / (nf - 1.0);
    // var(s_ij) = n / (n-1)^3 * sum_k (z_ki z_kj - mean_k(z_ki z_kj))^2
    let zbar = &s * ((nf - 1.0) / nf);
    let mut acc = Array2::<f64>::zeros((d, d));
    for row in z.outer_iter() {
        for i in 0..d {
            for j in 0..d {
                let e = row[i] * row[j] - zbar[[i, j]];
                acc[[i, j]] += e * e;
            }
        }
    }
    let var = acc * (nf / (nf - 1.0).powi(3));
    shrinkage_intensity(&s, &var)
}

/// Fits the discriminant on rows of `x`; `y[i] == true` marks class 1.
/// `score(x) = w^T x + b > 0` predicts class 1.
pub fn fit_rlda(x: ArrayView2<'_, f64>, y: &[bool], shrinkage: Shrinkage) -> Result<RldaModel, ClassifyError> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(ClassifyError::DimensionMismatch { expected: n, actual: y.len() });
    }
    let idx1: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
    let idx0: Vec<usize> = (0..n).filter(|&i| !y[i]).collect();
    if idx0.is_empty() || idx1.is_empty() {
        return Err(ClassifyError::SingleClass { class: None });
    }
    let mean_of = |idx: &[usize]| x.select(Axis(0), idx).mean_axis(Axis(0)).expect("non-empty class");
    let mu0 = mean_of(&idx0);
    let mu1 = mean_of(&idx1);

    let mut z = x.to_owned();
    for (i, mut row) in z.outer_iter_mut().enumerate() {
        row -= if y[i] { &mu1 } else { &mu0 };
    }
    let s = if n > 1 { z.t().dot(&z) / (n as f64 - 1.0) } else { Array2::zeros((d, d)) };
    let gamma = match shrinkage {
        Shrinkage::Fixed(g) => g,
        Shrinkage::Analytic => analytic_gamma(z.view()),
    };
    let pooled = shrink_covariance(&s, gamma);

    let chol = Cholesky::new(to_na(&pooled)).ok_or(ClassifyError::DegenerateCovariance { gamma })?;
    let diff = DVector::from_iterator(d, &mu1 - &mu0);
    let w_na = chol.solve(&diff);
    let w = Array1::from_iter(w_na.iter().copied());
    if w.iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::DegenerateCovariance { gamma });
    }
    let b = -w.dot(&(&mu1 + &mu0)) / 2.0;
    Ok(RldaModel { w, b, gamma, class_means: [mu0, mu1], pooled_cov: pooled })
}

pub fn rlda_score(m: &RldaModel, x: ArrayView1<'_, f64>) -> Result<f64, ClassifyError> {
    if x.len() != m.w.len() {
        return Err(ClassifyError::DimensionMismatch { expected: m.w.len(), actual: x.len() });
    }
    Ok(m.w.dot(&x) + m.b)
}
