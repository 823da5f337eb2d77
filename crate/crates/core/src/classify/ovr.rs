//! One-vs-rest composition of CSP + RLDA discriminants.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::rlda::{fit_rlda, RldaModel};
use super::ClassifyError;
use crate::config::AnalysisConfig;
use crate::csp::{csp_features, csp_features_from_covariances, fit_csp, CspModel, TrialCovariances};
use crate::types::{ClassLabel, EpochSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrEntry {
    pub class: ClassLabel,
    pub csp: CspModel,
    pub rlda: RldaModel,
    /// Mean and standard deviation of the training scores, when scores are
    /// standardized before comparison.
    pub score_norm: Option<(f64, f64)>,
}

impl OvrEntry {
    fn scores_from_features(&self, feats: &Array2<f64>) -> Array1<f64> {
        let raw = feats.dot(&self.rlda.w) + self.rlda.b;
        match self.score_norm {
            Some((m, s)) => raw.mapv(|v| (v - m) / s),
            None => raw,
        }
    }

    /// Scores on cached trial covariances.
    pub fn scores_cached(&self, cache: &TrialCovariances, trials: &[usize]) -> Result<Array1<f64>, ClassifyError> {
        let f = csp_features_from_covariances(&self.csp, cache, trials)?;
        Ok(self.scores_from_features(&f))
    }

    pub fn scores(&self, es: &EpochSet) -> Result<Array1<f64>, ClassifyError> {
        let f = csp_features(&self.csp, es)?;
        Ok(self.scores_from_features(&f))
    }
}

/// One entry per class, in class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrClassifier {
    pub entries: Vec<OvrEntry>,
}

/// CSP (class vs all others) followed by RLDA on the log-variance features,
/// fitted on the `train` subset only.
pub fn train_binary_on(
    cache: &TrialCovariances,
    labels: &[ClassLabel],
    train: &[usize],
    class: ClassLabel,
    cfg: &AnalysisConfig,
) -> Result<OvrEntry, ClassifyError> {
    let fit = || -> Result<OvrEntry, ClassifyError> {
        let (target, rest): (Vec<usize>, Vec<usize>) = train.iter().partition(|&&i| labels[i] == class);
        if target.is_empty() || rest.is_empty() {
            return Err(ClassifyError::SingleClass { class: Some(class) });
        }
        let st = cache.mean_covariance(&target, cfg.shrinkage, &format!("class {class}"))?;
        let sr = cache.mean_covariance(&rest, cfg.shrinkage, &format!("rest of {class}"))?;
        let mut csp = fit_csp(&st, &sr, cfg.n_csp_pairs)?;
        csp.target = Some(class);
        let feats = csp_features_from_covariances(&csp, cache, train)?;
        let y: Vec<bool> = train.iter().map(|&i| labels[i] == class).collect();
        let rlda = fit_rlda(feats.view(), &y, cfg.shrinkage)?;
        let mut entry = OvrEntry { class, csp, rlda, score_norm: None };
        if cfg.standardize_ovr_scores {
            let s = entry.scores_from_features(&feats);
            let sd = s.std(1.0);
            entry.score_norm = Some((s.mean().unwrap_or(0.0), if sd > 0.0 { sd } else { 1.0 }));
        }
        Ok(entry)
    };
    fit().map_err(|e| e.tag(class))
}

pub fn train_ovr_on(
    cache: &TrialCovariances,
    labels: &[ClassLabel],
    train: &[usize],
    cfg: &AnalysisConfig,
) -> Result<OvrClassifier, ClassifyError> {
    let entries =
        ClassLabel::ALL.iter().map(|&c| train_binary_on(cache, labels, train, c, cfg)).collect::<Result<_, _>>()?;
    Ok(OvrClassifier { entries })
}

/// Trains on every trial of an alpha-filtered epoch set.
pub fn train_ovr(es: &EpochSet, cfg: &AnalysisConfig) -> Result<OvrClassifier, ClassifyError> {
    let cache = TrialCovariances::from_epochs(es);
    let all: Vec<usize> = (0..es.n_trials()).collect();
    train_ovr_on(&cache, es.labels(), &all, cfg)
}

/// `[n_trials, n_classes]` discriminant scores.
pub fn decision_scores(clf: &OvrClassifier, es: &EpochSet) -> Result<Array2<f64>, ClassifyError> {
    let mut out = Array2::<f64>::zeros((es.n_trials(), clf.entries.len()));
    for (k, e) in clf.entries.iter().enumerate() {
        if e.csp.n_channels() != es.n_channels() {
            return Err(ClassifyError::DimensionMismatch { expected: e.csp.n_channels(), actual: es.n_channels() });
        }
        out.column_mut(k).assign(&e.scores(es)?);
    }
    Ok(out)
}

/// Highest-scoring class per row; ties go to the earlier class.
pub(crate) fn argmax_labels(scores: &Array2<f64>, classes: &[ClassLabel]) -> Vec<ClassLabel> {
    scores
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            classes[best]
        })
        .collect()
}

pub fn predict(clf: &OvrClassifier, es: &EpochSet) -> Result<Vec<ClassLabel>, ClassifyError> {
    let scores = decision_scores(clf, es)?;
    let classes: Vec<ClassLabel> = clf.entries.iter().map(|e| e.class).collect();
    Ok(argmax_labels(&scores, &classes))
}
