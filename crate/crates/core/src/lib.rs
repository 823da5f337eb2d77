//! Offline EEG decoding for visual motion imagery.
//!
//! The crate covers the whole offline path: BrainVision ingestion
//! ([`io`]), alpha-band filtering and epoching ([`dsp`]), common spatial
//! patterns ([`csp`]), shrinkage LDA with one-vs-rest composition and
//! repeated stratified cross-validation ([`classify`]), ERSP and scalp
//! topography ([`timefreq`]), and a synthetic session generator with planted
//! ground truth ([`synth`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod config;
pub mod csp;
pub mod dsp;
pub mod io;
mod linalg;
pub mod montage;
pub mod pipeline;
pub mod synth;
pub mod timefreq;
pub mod types;

pub use config::{AnalysisConfig, CvConfig, Shrinkage};
pub use linalg::shrink_covariance;
pub use montage::{default_montage, ChannelInfo, Montage};
pub use types::{
    validate_recording, ClassLabel, ContinuousRecording, EpochSet, MarkerEvent, MarkerKind, SessionKind, Violation,
};
