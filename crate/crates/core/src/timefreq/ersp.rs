//! Hann-windowed short-time spectra, trial-averaged and normalised to the
//! end of the rest phase.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{unknown_channel, TimefreqError};
use crate::config::AnalysisConfig;
use crate::dsp::extract_epochs;
use crate::types::{ContinuousRecording, EpochSet, MarkerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineInfo {
    pub source: String,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErspResult {
    /// `[n_freqs, n_times]`, `10 log10(P / P_base)`.
    pub values_db: Array2<f64>,
    pub freqs_hz: Vec<f64>,
    /// Window centres relative to onset.
    pub times_s: Vec<f64>,
    pub baseline: BaselineInfo,
    pub channel: String,
}

/// Precomputed `w[n] cos`, `w[n] sin` rows for a fixed window and grid.
struct Kernel {
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    norm: f64,
}

impl Kernel {
    fn new(len: usize, fs: f64, freqs: &[f64]) -> Self {
        // periodic Hann
        let w: Vec<f64> = (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect();
        let energy: f64 = w.iter().map(|v| v * v).sum();
        let table = |trig: fn(f64) -> f64| -> Vec<Vec<f64>> {
            freqs
                .iter()
                .map(|&f| w.iter().enumerate().map(|(n, wn)| wn * trig(2.0 * PI * f * n as f64 / fs)).collect())
                .collect()
        };
        Self { cos: table(f64::cos), sin: table(f64::sin), norm: 2.0 / (fs * energy) }
    }

    /// One-sided power spectral density of the mean-removed segment.
    fn psd_into(&self, x: &[f64], out: &mut [f64]) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        for ((o, c), s) in out.iter_mut().zip(&self.cos).zip(&self.sin) {
            let (mut re, mut im) = (0.0, 0.0);
            for ((v, cv), sv) in x.iter().zip(c).zip(s) {
                let d = v - mean;
                re += d * cv;
                im += d * sv;
            }
            *o = self.norm * (re * re + im * im);
        }
    }
}

/// Hann-windowed power spectral density (µV²/Hz) of `x` at `freqs`, after
/// removing the mean. For a band-limited segment, the sum over a grid of
/// spacing `df` times `df` equals the Hann-weighted variance, and the plain
/// variance in expectation.
pub fn hann_power(x: &[f64], fs: f64, freqs: &[f64]) -> Vec<f64> {
    let k = Kernel::new(x.len(), fs, freqs);
    let mut out = vec![0.0; freqs.len()];
    k.psd_into(x, &mut out);
    out
}

fn samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

/// ERSP of one channel. `baselines` holds one rest segment per epoch whose
/// last `ersp_baseline_ms` form the baseline. Frame starts are spread evenly
/// over the epoch so that there are exactly `ersp_n_times` of them.
pub fn compute_ersp(
    epochs: &EpochSet,
    baselines: &EpochSet,
    channel: &str,
    cfg: &AnalysisConfig,
) -> Result<ErspResult, TimefreqError> {
    let ch = epochs.montage().index_of(channel).ok_or_else(|| unknown_channel(channel, epochs.montage()))?;
    let bch = baselines.montage().index_of(channel).ok_or_else(|| unknown_channel(channel, baselines.montage()))?;
    if epochs.n_trials() != baselines.n_trials() {
        return Err(TimefreqError::BaselineCountMismatch {
            epochs: epochs.n_trials(),
            baselines: baselines.n_trials(),
        });
    }
    if epochs.n_trials() == 0 {
        return Err(TimefreqError::NoTrials);
    }
    let fs = epochs.sample_rate_hz();
    let win = samples(cfg.ersp_window_ms, fs).max(2);
    let n_times = cfg.ersp_n_times;
    let n = epochs.n_samples();
    let needed = win + n_times - 1;
    if n < needed {
        return Err(TimefreqError::EpochTooShort { samples: n, needed });
    }
    let base_len = samples(cfg.ersp_baseline_ms, fs);
    if baselines.n_samples() < base_len || base_len < win {
        return Err(TimefreqError::MissingBaseline {
            trial: 0,
            needed_ms: cfg.ersp_baseline_ms.max(cfg.ersp_window_ms),
        });
    }

    let freqs = cfg.ersp_freqs();
    let kernel = Kernel::new(win, fs, &freqs);
    let starts: Vec<usize> = if n_times == 1 {
        vec![0]
    } else {
        (0..n_times).map(|k| ((k * (n - win)) as f64 / (n_times - 1) as f64).round() as usize).collect()
    };
    let hop = (win / 4).max(1);
    let base_off = baselines.n_samples() - base_len;
    let base_starts: Vec<usize> = (0..=(base_len - win) / hop).map(|k| base_off + k * hop).collect();

    let nf = freqs.len();
    let mut power = Array2::<f64>::zeros((nf, n_times));
    let mut base = vec![0.0; nf];
    let mut buf = vec![0.0; nf];
    for t in 0..epochs.n_trials() {
        let trial = epochs.trial(t);
        let row = trial.row(ch);
        let x = row.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| row.to_vec());
        for (k, &s) in starts.iter().enumerate() {
            kernel.psd_into(&x[s..s + win], &mut buf);
            for (f, v) in buf.iter().enumerate() {
                power[[f, k]] += v;
            }
        }
        let b = baselines.trial(t).row(bch).to_vec();
        for &s in &base_starts {
            kernel.psd_into(&b[s..s + win], &mut buf);
            base.iter_mut().zip(&buf).for_each(|(a, v)| *a += v / base_starts.len() as f64);
        }
    }

    let mut values_db = Array2::<f64>::zeros((nf, n_times));
    for (f, &pb) in base.iter().enumerate() {
        for k in 0..n_times {
            let r = power[[f, k]] / pb;
            if !(r > 0.0) || !r.is_finite() {
                return Err(TimefreqError::DegeneratePower { freq_hz: freqs[f] });
            }
            values_db[[f, k]] = 10.0 * r.log10();
        }
    }
    let t0 = epochs.window_s().0;
    let times_s = starts.iter().map(|&s| t0 + (s as f64 + win as f64 / 2.0) / fs).collect();
    Ok(ErspResult {
        values_db,
        freqs_hz: freqs,
        times_s,
        baseline: BaselineInfo { source: "rest-phase end".into(), duration_ms: cfg.ersp_baseline_ms },
        channel: channel.to_string(),
    })
}

/// ERSP at the session's task onsets, with each trial's baseline taken from
/// the end of the rest phase that precedes it.
pub fn ersp_from_recording(
    rec: &ContinuousRecording,
    channel: &str,
    cfg: &AnalysisConfig,
) -> Result<ErspResult, TimefreqError> {
    if rec.channel_index(channel).is_none() {
        return Err(unknown_channel(channel, &rec.montage));
    }
    let onset = rec.session_kind.onset_kind();
    let fs = rec.sample_rate_hz;
    let base_len = samples(cfg.ersp_baseline_ms, fs);
    let mut rest_at: Option<usize> = None;
    let mut trial = 0;
    for m in &rec.markers {
        if m.kind == MarkerKind::RestOnset {
            rest_at = Some(m.sample_index);
        } else if m.kind == onset {
            match rest_at.take() {
                Some(r) if m.sample_index >= r + base_len => {}
                _ => return Err(TimefreqError::MissingBaseline { trial, needed_ms: cfg.ersp_baseline_ms }),
            }
            trial += 1;
        }
    }
    let montage = rec.montage.subset(&[channel]).expect("channel checked above");
    let row = rec.channel_index(channel).expect("channel checked above");
    let single = ContinuousRecording {
        montage,
        sample_rate_hz: fs,
        data: rec.data.slice(ndarray::s![row..row + 1, ..]).to_owned(),
        markers: rec.markers.clone(),
        session_kind: rec.session_kind,
    };
    let epochs = extract_epochs(&single, cfg.ersp_epoch_s, onset)?;
    let baselines = extract_epochs(&single, (-(base_len as f64) / fs, 0.0), onset)?;
    compute_ersp(&epochs, &baselines, channel, cfg)
}
