//! Repeated, seeded, stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ovr::{argmax_labels, train_binary_on, train_ovr_on, OvrClassifier, OvrEntry};
use super::report::format_cell;
use super::ClassifyError;
use crate::config::{AnalysisConfig, CvConfig};
use crate::csp::TrialCovariances;
use crate::types::{ClassLabel, EpochSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvMode {
    FourClass,
    /// The given class against the pooled other three.
    BinaryOvr(ClassLabel),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fold assignment for every repeat. `strata[i]` is the stratum of trial
/// `i`; within each repeat, trials are shuffled per stratum and dealt to the
/// folds round-robin, strata in ascending order.
pub fn fold_splits(strata: &[usize], cv: &CvConfig) -> Vec<Fold> {
    let n = strata.len();
    let k = cv.folds.max(1);
    let mut out = Vec::with_capacity(cv.repeats * k);
    for repeat in 0..cv.repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);
        rng.set_stream(repeat as u64);
        let mut order: Vec<usize> = Vec::with_capacity(n);
        if cv.stratified {
            let mut groups: Vec<usize> = strata.to_vec();
            groups.sort_unstable();
            groups.dedup();
            for g in groups {
                let mut idx: Vec<usize> = (0..n).filter(|&i| strata[i] == g).collect();
                idx.shuffle(&mut rng);
                order.extend(idx);
            }
        } else {
            order.extend(0..n);
            order.shuffle(&mut rng);
        }
        let mut assign = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            assign[i] = pos % k;
        }
        for fold in 0..k {
            let test: Vec<usize> = (0..n).filter(|&i| assign[i] == fold).collect();
            let train: Vec<usize> = (0..n).filter(|&i| assign[i] != fold).collect();
            out.push(Fold { repeat, fold, train, test });
        }
    }
    out
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FoldModel {
    FourClass(OvrClassifier),
    Binary(OvrEntry),
}

/// Everything fitted for one fold; reads labels of `fold.train` only.
pub fn train_fold(
    cache: &TrialCovariances,
    labels: &[ClassLabel],
    fold: &Fold,
    cfg: &AnalysisConfig,
    mode: CvMode,
) -> Result<FoldModel, ClassifyError> {
    Ok(match mode {
        CvMode::FourClass => FoldModel::FourClass(train_ovr_on(cache, labels, &fold.train, cfg)?),
        CvMode::BinaryOvr(c) => FoldModel::Binary(train_binary_on(cache, labels, &fold.train, c, cfg)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: CvMode,
    pub scheme: CvConfig,
    /// Accuracy of every (repeat, fold), as fractions.
    pub per_fold_acc: Vec<f64>,
    pub mean_acc: f64,
    /// Sample standard deviation over `per_fold_acc`.
    pub std_acc: f64,
    /// `confusion[true][predicted]`, summed over all repeats.
    pub confusion: Vec<Vec<usize>>,
    pub class_names: Vec<String>,
    pub chance_level: f64,
    pub n_trials: usize,
}

impl EvalReport {
    /// `"mean% (±std)"` in percent.
    pub fn cell(&self) -> String {
        format_cell(self.mean_acc, self.std_acc)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

pub fn cross_validate(es: &EpochSet, cfg: &AnalysisConfig, mode: CvMode) -> Result<EvalReport, ClassifyError> {
    let cache = TrialCovariances::from_epochs(es);
    cross_validate_cached(&cache, es.labels(), cfg, mode)
}

/// Cross-validation over precomputed per-trial covariances. All CSP, RLDA
/// and shrinkage fitting happens inside each training fold.
pub fn cross_validate_cached(
    cache: &TrialCovariances,
    labels: &[ClassLabel],
    cfg: &AnalysisConfig,
    mode: CvMode,
) -> Result<EvalReport, ClassifyError> {
    let k = cfg.cv.folds;
    if cache.len() != labels.len() {
        return Err(ClassifyError::DimensionMismatch { expected: cache.len(), actual: labels.len() });
    }
    let (strata, class_names): (Vec<usize>, Vec<String>) = match mode {
        CvMode::FourClass => {
            (labels.iter().map(|l| l.index()).collect(), ClassLabel::ALL.iter().map(|c| c.to_string()).collect())
        }
        CvMode::BinaryOvr(c) => {
            (labels.iter().map(|&l| usize::from(l != c)).collect(), vec![c.to_string(), "Rest".to_string()])
        }
    };
    let n_groups = class_names.len();
    let mut counts = vec![0usize; n_groups];
    for &s in &strata {
        counts[s] += 1;
    }
    for (g, &found) in counts.iter().enumerate() {
        if found < k {
            return Err(ClassifyError::InsufficientTrials { what: class_names[g].clone(), found, needed: k });
        }
    }

    let mut per_fold_acc = Vec::new();
    let mut confusion = vec![vec![0usize; n_groups]; n_groups];
    for fold in fold_splits(&strata, &cfg.cv) {
        let model = train_fold(cache, labels, &fold, cfg, mode)?;
        let predicted: Vec<usize> = match &model {
            FoldModel::FourClass(clf) => {
                let mut scores = ndarray::Array2::<f64>::zeros((fold.test.len(), clf.entries.len()));
                for (j, e) in clf.entries.iter().enumerate() {
                    scores.column_mut(j).assign(&e.scores_cached(cache, &fold.test)?);
                }
                let classes: Vec<ClassLabel> = clf.entries.iter().map(|e| e.class).collect();
                argmax_labels(&scores, &classes).into_iter().map(|l| l.index()).collect()
            }
            FoldModel::Binary(e) => {
                e.scores_cached(cache, &fold.test)?.iter().map(|&s| usize::from(s <= 0.0)).collect()
            }
        };
        let mut correct = 0;
        for (&i, &p) in fold.test.iter().zip(&predicted) {
            confusion[strata[i]][p] += 1;
            correct += usize::from(strata[i] == p);
        }
        per_fold_acc.push(correct as f64 / fold.test.len() as f64);
    }

    let (mean_acc, std_acc) = mean_std(&per_fold_acc);
    let n = labels.len() as f64;
    let chance_level = match mode {
        CvMode::FourClass => 1.0 / ClassLabel::ALL.len() as f64,
        CvMode::BinaryOvr(_) => counts.iter().map(|&c| c as f64 / n).fold(0.0, f64::max),
    };
    Ok(EvalReport {
        mode,
        scheme: cfg.cv,
        per_fold_acc,
        mean_acc,
        std_acc,
        confusion,
        class_names,
        chance_level,
        n_trials: labels.len(),
    })
}
