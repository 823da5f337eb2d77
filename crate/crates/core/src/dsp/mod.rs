//! Filter design and application, epoch extraction and band power.

mod filtfilt;
mod iir;

pub use filtfilt::{apply_causal, apply_zero_phase, sos_filter_in_place, sos_initial_state};
pub use iir::{design_butterworth_bandpass, design_notch, FilterDesign, FilterKind, IirFilter, Sos};

use ndarray::{Array2, Array3, Axis};
use thiserror::Error;

use crate::types::{window_samples, ContinuousRecording, EpochError, EpochSet, MarkerKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid band ({low_hz}, {high_hz}) Hz for sampling rate {fs_hz} Hz")]
    InvalidBand { low_hz: f64, high_hz: f64, fs_hz: f64 },
    #[error("filter order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("notch quality factor must be positive, got {0}")]
    InvalidQ(f64),
    #[error("signal of {len} samples is too short, need at least {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("epoch window ({0}, {1}) s is not increasing")]
    InvalidWindow(f64, f64),
    #[error("epoch for marker {marker} (sample {sample}) exceeds the recording")]
    EpochOutOfBounds { marker: usize, sample: usize },
    #[error("onset marker {marker} carries no class label")]
    UnlabeledOnset { marker: usize },
    #[error(transparent)]
    Epoch(#[from] EpochError),
}

/// Slices `[m + round(t0 * fs), m + round(t0 * fs) + round((t1 - t0) * fs))`
/// around every marker of kind `which`. Trials follow marker order in the
/// list, which for a valid recording is sample order.
pub fn extract_epochs(
    rec: &ContinuousRecording,
    window_s: (f64, f64),
    which: MarkerKind,
) -> Result<EpochSet, DspError> {
    if !(window_s.1 > window_s.0) {
        return Err(DspError::InvalidWindow(window_s.0, window_s.1));
    }
    let fs = rec.sample_rate_hz;
    let len = window_samples(window_s, fs);
    let offset = (window_s.0 * fs).round() as i64;
    let n_ch = rec.n_channels();
    let n_samples = rec.n_samples() as i64;

    let picked: Vec<(usize, usize)> =
        rec.markers.iter().enumerate().filter(|(_, m)| m.kind == which).map(|(i, m)| (i, m.sample_index)).collect();

    let mut data = Array3::<f64>::zeros((picked.len(), n_ch, len));
    let mut labels = Vec::with_capacity(picked.len());
    for (t, &(marker, sample)) in picked.iter().enumerate() {
        let start = sample as i64 + offset;
        let end = start + len as i64;
        if start < 0 || end > n_samples {
            return Err(DspError::EpochOutOfBounds { marker, sample });
        }
        let label = rec.markers[marker].class_label.ok_or(DspError::UnlabeledOnset { marker })?;
        labels.push(label);
        let src = rec.data.slice(ndarray::s![.., start as usize..end as usize]);
        data.index_axis_mut(Axis(0), t).assign(&src.mapv(f64::from));
    }
    Ok(EpochSet::new(data, labels, window_s, fs, rec.montage.clone())?)
}

/// Zero-phase filtering of every trial and channel.
pub fn filter_epochs(es: &EpochSet, f: &IirFilter) -> Result<EpochSet, DspError> {
    es.map_rows(|row| apply_zero_phase(f, row))
}

/// Zero-phase filtering of every channel of a continuous recording.
pub fn filter_recording(rec: &ContinuousRecording, f: &IirFilter) -> Result<ContinuousRecording, DspError> {
    let mut out = rec.clone();
    filter_recording_in_place(&mut out, f)?;
    Ok(out)
}

/// As [`filter_recording`], overwriting the samples.
pub fn filter_recording_in_place(rec: &mut ContinuousRecording, f: &IirFilter) -> Result<(), DspError> {
    let mut row = Vec::with_capacity(rec.n_samples());
    for mut ch in rec.data.outer_iter_mut() {
        row.clear();
        row.extend(ch.iter().map(|&v| f64::from(v)));
        let y = apply_zero_phase(f, &row)?;
        ch.iter_mut().zip(y).for_each(|(d, v)| *d = v as f32);
    }
    Ok(())
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Per trial and channel, variance of the band-pass filtered epoch (µV²).
/// The filter is the configured-order Butterworth over `band_hz`.
pub fn band_power(es: &EpochSet, band_hz: (f64, f64), order: usize) -> Result<Array2<f64>, DspError> {
    let f = design_butterworth_bandpass(order, band_hz.0, band_hz.1, es.sample_rate_hz())?;
    let mut out = Array2::<f64>::zeros((es.n_trials(), es.n_channels()));
    for (t, trial) in es.data().outer_iter().enumerate() {
        for (c, row) in trial.outer_iter().enumerate() {
            let y = apply_zero_phase(&f, &row.to_vec())?;
            out[[t, c]] = variance(&y);
        }
    }
    Ok(out)
}
