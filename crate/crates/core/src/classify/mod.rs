//! Shrinkage LDA, one-vs-rest composition, repeated stratified
//! cross-validation and the accuracy tables.

mod cv;
mod ovr;
mod report;
mod rlda;

pub use cv::{cross_validate, cross_validate_cached, fold_splits, train_fold, CvMode, EvalReport, Fold, FoldModel};
pub use ovr::{decision_scores, predict, train_binary_on, train_ovr, train_ovr_on, OvrClassifier, OvrEntry};
pub use report::{format_cell, render_report, ReportGrid, TableLayout};
pub use rlda::{analytic_gamma, fit_rlda, rlda_score, RldaModel};

use thiserror::Error;

use crate::csp::CspError;
use crate::types::ClassLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("{}", match class { Some(c) => format!("no trials of class {c}; both sides of a discriminant are needed"), None => "training data contains a single class".to_string() })]
    SingleClass { class: Option<ClassLabel> },
    #[error("pooled covariance is not positive definite after shrinkage (gamma = {gamma})")]
    DegenerateCovariance { gamma: f64 },
    #[error("expected dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{what} has {found} trials, cross-validation needs at least {needed}")]
    InsufficientTrials { what: String, found: usize, needed: usize },
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("class {class}: {source}")]
    Entry { class: ClassLabel, source: Box<ClassifyError> },
}

impl ClassifyError {
    pub(crate) fn tag(self, class: ClassLabel) -> Self {
        match self {
            e @ ClassifyError::Entry { .. } => e,
            e => ClassifyError::Entry { class, source: Box::new(e) },
        }
    }
}
