//! Analysis constants and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Covariance shrinkage towards a scaled identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shrinkage {
    /// Analytic Ledoit-Wolf intensity estimated from the sample scatter.
    Analytic,
    /// Fixed intensity in `[0, 1]`.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 10, repeats: 5, stratified: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub alpha_band_hz: (f64, f64),
    /// Order of the analog lowpass prototype; the bandpass has twice as many poles.
    pub filter_order: usize,
    /// Classification window relative to cue onset.
    pub epoch_window_s: (f64, f64),
    pub ersp_freq_range_hz: (f64, f64),
    pub ersp_freq_step_hz: f64,
    pub ersp_n_times: usize,
    /// STFT window length.
    pub ersp_window_ms: f64,
    /// Window relative to cue onset over which the ERSP is computed.
    pub ersp_epoch_s: (f64, f64),
    /// Baseline length, taken from the end of the rest phase.
    pub ersp_baseline_ms: f64,
    /// Topography windows relative to cue onset.
    pub topo_windows_ms: Vec<(f64, f64)>,
    pub n_csp_pairs: usize,
    pub shrinkage: Shrinkage,
    pub cv: CvConfig,
    /// z-score each one-vs-rest score by the spread of its training scores.
    pub standardize_ovr_scores: bool,
    /// Optional line-noise notch (centre Hz, Q) applied before band-pass.
    pub notch: Option<(f64, f64)>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha_band_hz: (8.0, 13.0),
            filter_order: 3,
            epoch_window_s: (0.5, 4.0),
            ersp_freq_range_hz: (3.0, 50.0),
            ersp_freq_step_hz: 1.0,
            ersp_n_times: 200,
            ersp_window_ms: 500.0,
            ersp_epoch_s: (0.0, 5.0),
            ersp_baseline_ms: 500.0,
            topo_windows_ms: vec![(0.0, 1000.0), (1000.0, 2000.0), (2000.0, 3000.0), (3000.0, 4000.0)],
            n_csp_pairs: 3,
            shrinkage: Shrinkage::Analytic,
            cv: CvConfig::default(),
            standardize_ovr_scores: false,
            notch: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} bounds ({lo}, {hi}) must be strictly increasing")]
    NotIncreasing { name: &'static str, lo: f64, hi: f64 },
    #[error("shrinkage intensity {0} outside [0, 1]")]
    ShrinkageOutOfRange(f64),
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

fn increasing(name: &'static str, (lo, hi): (f64, f64)) -> Result<(), ConfigError> {
    if lo < hi && lo.is_finite() && hi.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NotIncreasing { name, lo, hi })
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        increasing("alpha band", self.alpha_band_hz)?;
        increasing("epoch window", self.epoch_window_s)?;
        increasing("ERSP frequency range", self.ersp_freq_range_hz)?;
        increasing("ERSP epoch", self.ersp_epoch_s)?;
        for &w in &self.topo_windows_ms {
            increasing("topography window", w)?;
        }
        if self.filter_order == 0 {
            return Err(ConfigError::Zero("filter order"));
        }
        if self.n_csp_pairs == 0 {
            return Err(ConfigError::Zero("CSP pair count"));
        }
        if self.ersp_n_times == 0 {
            return Err(ConfigError::Zero("ERSP time points"));
        }
        if self.cv.repeats == 0 {
            return Err(ConfigError::Zero("CV repeats"));
        }
        for (name, v) in [
            ("ERSP frequency step", self.ersp_freq_step_hz),
            ("ERSP window", self.ersp_window_ms),
            ("ERSP baseline", self.ersp_baseline_ms),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if let Shrinkage::Fixed(g) = self.shrinkage {
            if !(0.0..=1.0).contains(&g) {
                return Err(ConfigError::ShrinkageOutOfRange(g));
            }
        }
        if self.cv.folds < 2 {
            return Err(ConfigError::TooFewFolds(self.cv.folds));
        }
        Ok(())
    }

    /// ERSP frequency grid, inclusive of both ends.
    pub fn ersp_freqs(&self) -> Vec<f64> {
        let (lo, hi) = self.ersp_freq_range_hz;
        let n = ((hi - lo) / self.ersp_freq_step_hz + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + i as f64 * self.ersp_freq_step_hz).collect()
    }
}
