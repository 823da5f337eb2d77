//! Common spatial patterns and log-variance features.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Shrinkage;
use crate::linalg::{shrink_covariance, shrinkage_intensity, sym_eig_desc, to_na};
use crate::types::{ClassLabel, EpochSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CspError {
    #[error("{what} has {found} trials, at least 2 are needed")]
    InsufficientTrials { what: String, found: usize },
    #[error("composite covariance is not positive definite (smallest eigenvalue {min_eig:e})")]
    SingularCovariance { min_eig: f64 },
    #[error("{n_pairs} filter pairs need {} channels, only {n_channels} available", 2 * n_pairs)]
    TooManyPairs { n_pairs: usize, n_channels: usize },
    #[error("at least one filter pair is required")]
    NoPairs,
    #[error("trial {trial} has zero variance in every CSP component")]
    ZeroVarianceTrial { trial: usize },
    #[error("model expects {expected} channels, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspModel {
    /// `[2 * n_pairs, n_channels]`, rows ordered by eigenvalue, descending.
    pub filters: Array2<f64>,
    /// `[n_channels, 2 * n_pairs]`, the matching columns of the inverse of
    /// the full filter matrix.
    pub patterns: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    /// Class whose covariance was the target; `None` for a bare two-matrix fit.
    pub target: Option<ClassLabel>,
}

impl CspModel {
    pub fn n_pairs(&self) -> usize {
        self.eigenvalues.len() / 2
    }

    pub fn n_channels(&self) -> usize {
        self.filters.ncols()
    }
}

fn trace_normalized_scatter(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let s = x.dot(&x.t());
    let tr = s.diag().sum();
    if tr > 0.0 {
        s / tr
    } else {
        s
    }
}

/// Mean of the trace-normalized scatter `X X^T / tr(X X^T)` over the trials
/// labelled `label`.
pub fn class_covariance(es: &EpochSet, label: ClassLabel) -> Result<Array2<f64>, CspError> {
    let idx: Vec<usize> = (0..es.n_trials()).filter(|&i| es.labels()[i] == label).collect();
    if idx.len() < 2 {
        return Err(CspError::InsufficientTrials { what: format!("class {label}"), found: idx.len() });
    }
    let d = es.n_channels();
    let mut acc = Array2::<f64>::zeros((d, d));
    for &i in &idx {
        acc += &trace_normalized_scatter(es.trial(i));
    }
    Ok(acc / idx.len() as f64)
}

/// Per-trial second-order statistics, computed once so that repeated fits
/// over different trial subsets do not touch the raw samples again. Holds no
/// label information.
#[derive(Debug, Clone)]
pub struct TrialCovariances {
    /// `X X^T / tr(X X^T)`
    normalized: Vec<Array2<f64>>,
    /// Unbiased sample covariance (mean removed).
    centered: Vec<Array2<f64>>,
}

impl TrialCovariances {
    pub fn from_epochs(es: &EpochSet) -> Self {
        let n = es.n_samples() as f64;
        let mut normalized = Vec::with_capacity(es.n_trials());
        let mut centered = Vec::with_capacity(es.n_trials());
        for x in es.data().outer_iter() {
            let s = x.dot(&x.t());
            let tr = s.diag().sum();
            let m: Array1<f64> = x.mean_axis(Axis(1)).expect("non-empty trial");
            let outer = m.view().insert_axis(Axis(1)).dot(&m.view().insert_axis(Axis(0)));
            centered.push((&s - &(outer * n)) / (n - 1.0));
            normalized.push(if tr > 0.0 { s / tr } else { s });
        }
        Self { normalized, centered }
    }

    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }

    pub fn centered(&self, trial: usize) -> &Array2<f64> {
        &self.centered[trial]
    }

    /// Mean normalized scatter over `trials`, shrunk as configured.
    pub fn mean_covariance(&self, trials: &[usize], shrinkage: Shrinkage, what: &str) -> Result<Array2<f64>, CspError> {
        let covs: Vec<&Array2<f64>> = trials.iter().map(|&i| &self.normalized[i]).collect();
        shrunk_mean(&covs, shrinkage, what)
    }
}

/// Shrinkage intensity for a mean of `n` matrices, from the spread of the
/// individual terms around it.
pub fn mean_covariance_shrinkage(covs: &[&Array2<f64>], mean: &Array2<f64>) -> f64 {
    let n = covs.len() as f64;
    let mut var = Array2::<f64>::zeros(mean.raw_dim());
    for c in covs {
        let diff = *c - mean;
        var += &(&diff * &diff);
    }
    var /= n * (n - 1.0);
    shrinkage_intensity(mean, &var)
}

fn shrunk_mean(covs: &[&Array2<f64>], shrinkage: Shrinkage, what: &str) -> Result<Array2<f64>, CspError> {
    if covs.len() < 2 {
        return Err(CspError::InsufficientTrials { what: what.to_string(), found: covs.len() });
    }
    let mut mean = Array2::<f64>::zeros(covs[0].raw_dim());
    for c in covs {
        mean += *c;
    }
    mean /= covs.len() as f64;
    let gamma = match shrinkage {
        Shrinkage::Fixed(g) => g,
        Shrinkage::Analytic => mean_covariance_shrinkage(covs, &mean),
    };
    Ok(shrink_covariance(&mean, gamma))
}

/// Solves `S_t w = lambda (S_t + S_r) w`, keeping the `n_pairs` filters at
/// each end of the spectrum.
pub fn fit_csp(sigma_target: &Array2<f64>, sigma_rest: &Array2<f64>, n_pairs: usize) -> Result<CspModel, CspError> {
    let d = sigma_target.nrows();
    if n_pairs == 0 {
        return Err(CspError::NoPairs);
    }
    if 2 * n_pairs > d {
        return Err(CspError::TooManyPairs { n_pairs, n_channels: d });
    }
    if sigma_rest.dim() != (d, d) || sigma_target.ncols() != d {
        return Err(CspError::DimensionMismatch { expected: d, actual: sigma_rest.nrows() });
    }
    let st = to_na(sigma_target);
    let composite = &st + to_na(sigma_rest);

    let (cv, cu) = sym_eig_desc(&composite);
    let max = cv[0].abs().max(f64::MIN_POSITIVE);
    let min = cv[d - 1];
    if !(min > 1e-12 * max) || !min.is_finite() {
        return Err(CspError::SingularCovariance { min_eig: min });
    }
    // whitening P = D^-1/2 U^T
    let mut p = cu.transpose();
    for (k, mut row) in p.row_iter_mut().enumerate() {
        row /= cv[k].sqrt();
    }
    let s = &p * &st * p.transpose();
    let (lambda, v) = sym_eig_desc(&s);
    let mut w_full: DMatrix<f64> = v.transpose() * &p;

    for mut row in w_full.row_iter_mut() {
        let (mut best, mut arg) = (0.0f64, 0);
        for (j, x) in row.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                arg = j;
            }
        }
        if row[arg] < 0.0 {
            row.neg_mut();
        }
    }
    // inverse of the full filter matrix: (S_t + S_r) W^T
    let a_full = &composite * w_full.transpose();

    let keep: Vec<usize> = (0..n_pairs).chain(d - n_pairs..d).collect();
    let filters = Array2::from_shape_fn((keep.len(), d), |(r, c)| w_full[(keep[r], c)]);
    let patterns = Array2::from_shape_fn((d, keep.len()), |(r, c)| a_full[(r, keep[c])]);
    let eigenvalues = keep.iter().map(|&k| lambda[k]).collect();
    Ok(CspModel { filters, patterns, eigenvalues, target: None })
}

fn log_ratio_row(vars: &[f64], trial: usize) -> Result<Vec<f64>, CspError> {
    let total: f64 = vars.iter().sum();
    if !(total > 0.0) {
        return Err(CspError::ZeroVarianceTrial { trial });
    }
    Ok(vars.iter().map(|v| (v / total).ln()).collect())
}

/// `log(var_i / sum_j var_j)` of the spatially filtered trials.
pub fn csp_features(m: &CspModel, es: &EpochSet) -> Result<Array2<f64>, CspError> {
    if es.n_channels() != m.n_channels() {
        return Err(CspError::DimensionMismatch { expected: m.n_channels(), actual: es.n_channels() });
    }
    let k = m.filters.nrows();
    let mut out = Array2::<f64>::zeros((es.n_trials(), k));
    for (t, x) in es.data().outer_iter().enumerate() {
        let z = m.filters.dot(&x);
        let vars: Vec<f64> = z.outer_iter().map(|r| r.var(1.0)).collect();
        let row = log_ratio_row(&vars, t)?;
        out.row_mut(t).assign(&Array1::from(row));
    }
    Ok(out)
}

/// Same features from per-trial sample covariances: `var(w^T X) = w^T C w`.
pub fn csp_features_from_covariances(
    m: &CspModel,
    covs: &TrialCovariances,
    trials: &[usize],
) -> Result<Array2<f64>, CspError> {
    let k = m.filters.nrows();
    let mut out = Array2::<f64>::zeros((trials.len(), k));
    for (r, &t) in trials.iter().enumerate() {
        let c = covs.centered(t);
        if c.nrows() != m.n_channels() {
            return Err(CspError::DimensionMismatch { expected: m.n_channels(), actual: c.nrows() });
        }
        let wc = m.filters.dot(c);
        let vars: Vec<f64> = (0..k).map(|i| wc.row(i).dot(&m.filters.row(i))).collect();
        let row = log_ratio_row(&vars, t)?;
        out.row_mut(r).assign(&Array1::from(row));
    }
    Ok(out)
}
