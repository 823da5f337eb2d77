//! Preprocessing shared by the command-line tools and the benches.

use crate::config::AnalysisConfig;
use crate::dsp::{design_butterworth_bandpass, design_notch, extract_epochs, filter_recording_in_place, DspError};
use crate::types::{ContinuousRecording, EpochSet};

/// Optional notch, then the alpha band-pass, applied in place.
pub fn preprocess(rec: &mut ContinuousRecording, cfg: &AnalysisConfig) -> Result<(), DspError> {
    let fs = rec.sample_rate_hz;
    if let Some((f0, q)) = cfg.notch {
        filter_recording_in_place(rec, &design_notch(f0, q, fs)?)?;
    }
    let (lo, hi) = cfg.alpha_band_hz;
    filter_recording_in_place(rec, &design_butterworth_bandpass(cfg.filter_order, lo, hi, fs)?)
}

/// Band-passed classification epochs at the session's task onsets.
pub fn alpha_epochs(mut rec: ContinuousRecording, cfg: &AnalysisConfig) -> Result<EpochSet, DspError> {
    preprocess(&mut rec, cfg)?;
    extract_epochs(&rec, cfg.epoch_window_s, rec.session_kind.onset_kind())
}
