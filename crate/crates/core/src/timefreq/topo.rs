//! Windowed alpha-band power per channel and its interpolation onto a
//! scalp grid.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::TimefreqError;
use crate::config::AnalysisConfig;
use crate::dsp::{apply_zero_phase, design_butterworth_bandpass, extract_epochs, variance};
use crate::montage::Montage;
use crate::types::{ContinuousRecording, EpochSet};

/// Extra epoch length on both sides of the analysed span, so filter edge
/// effects stay out of the baseline and the last window.
pub const TOPO_MARGIN_S: f64 = 0.5;

/// Half-width of the interpolation square; cells farther than this from
/// the centre are masked.
pub const GRID_EXTENT: f64 = 1.2;

const IDW_NEIGHBOURS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopoMode {
    /// Trial-averaged band power, µV².
    RawPower,
    /// `10 log10` of windowed power over rest-baseline power.
    DbVsBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopographyFrame {
    pub window_ms: (f64, f64),
    pub mode: TopoMode,
    /// One value per montage channel, montage order.
    pub values: Vec<f64>,
    pub montage: Montage,
}

impl TopographyFrame {
    /// Mean over the montage's occipital cluster.
    pub fn occipital_mean(&self) -> f64 {
        let idx = self.montage.occipital_indices();
        idx.iter().map(|&i| self.values[i]).sum::<f64>() / idx.len().max(1) as f64
    }
}

fn to_samples(t_s: f64, epoch_start_s: f64, fs: f64) -> i64 {
    ((t_s - epoch_start_s) * fs).round() as i64
}

/// Per window of `cfg.topo_windows_ms` (relative to onset), the trial mean of
/// the alpha-band variance of each channel. Each epoch is band-passed as a
/// whole before slicing. In dB mode the reference is the last
/// `ersp_baseline_ms` before onset, so the epochs must start that early.
pub fn alpha_topography(
    es: &EpochSet,
    cfg: &AnalysisConfig,
    mode: TopoMode,
) -> Result<Vec<TopographyFrame>, TimefreqError> {
    if es.n_trials() == 0 {
        return Err(TimefreqError::NoTrials);
    }
    let fs = es.sample_rate_hz();
    let (e0, e1) = es.window_s();
    let n = es.n_samples() as i64;
    let span = |w_ms: (f64, f64)| -> Result<(usize, usize), TimefreqError> {
        let a = to_samples(w_ms.0 / 1000.0, e0, fs);
        let b = to_samples(w_ms.1 / 1000.0, e0, fs);
        if a < 0 || b > n || b - a < 2 {
            return Err(TimefreqError::WindowOutOfEpoch(w_ms.0, w_ms.1, e0, e1));
        }
        Ok((a as usize, b as usize))
    };
    let windows = cfg.topo_windows_ms.iter().map(|&w| span(w)).collect::<Result<Vec<_>, _>>()?;
    let baseline = match mode {
        TopoMode::RawPower => None,
        TopoMode::DbVsBaseline => Some(span((-cfg.ersp_baseline_ms, 0.0))?),
    };

    let (lo, hi) = cfg.alpha_band_hz;
    let filter = design_butterworth_bandpass(cfg.filter_order, lo, hi, fs)?;
    let n_ch = es.n_channels();
    let mut power = Array2::<f64>::zeros((windows.len(), n_ch));
    let mut base = vec![0.0; n_ch];
    for trial in es.data().outer_iter() {
        for (c, row) in trial.outer_iter().enumerate() {
            let y = apply_zero_phase(&filter, &row.to_vec())?;
            for (w, &(a, b)) in windows.iter().enumerate() {
                power[[w, c]] += variance(&y[a..b]);
            }
            if let Some((a, b)) = baseline {
                base[c] += variance(&y[a..b]);
            }
        }
    }
    let k = es.n_trials() as f64;
    power /= k;
    base.iter_mut().for_each(|v| *v /= k);

    let mut frames = Vec::with_capacity(windows.len());
    for (w, &window_ms) in cfg.topo_windows_ms.iter().enumerate() {
        let row = power.slice(s![w, ..]);
        let values = match mode {
            TopoMode::RawPower => row.to_vec(),
            TopoMode::DbVsBaseline => row
                .iter()
                .zip(&base)
                .map(|(p, b)| {
                    let r = p / b;
                    if r > 0.0 && r.is_finite() {
                        Ok(10.0 * r.log10())
                    } else {
                        Err(TimefreqError::DegeneratePower { freq_hz: (lo * hi).sqrt() })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        frames.push(TopographyFrame { window_ms, mode, values, montage: es.montage().clone() });
    }
    Ok(frames)
}

/// Epochs around the session's task onsets covering the baseline and all
/// topography windows, plus [`TOPO_MARGIN_S`] on each side.
pub fn topography_epochs(rec: &ContinuousRecording, cfg: &AnalysisConfig) -> Result<EpochSet, TimefreqError> {
    let first = cfg.topo_windows_ms.iter().map(|w| w.0).fold(-cfg.ersp_baseline_ms, f64::min);
    let last = cfg.topo_windows_ms.iter().map(|w| w.1).fold(0.0, f64::max);
    let window = (first / 1000.0 - TOPO_MARGIN_S, last / 1000.0 + TOPO_MARGIN_S);
    Ok(extract_epochs(rec, window, rec.session_kind.onset_kind())?)
}

/// Square grid over `[-GRID_EXTENT, GRID_EXTENT]^2`; row 0 is the front
/// (largest y), column 0 the left. Masked cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalpGrid {
    pub values: Array2<f64>,
}

impl ScalpGrid {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Centre of cell `(row, col)` in head coordinates.
    pub fn cell_centre(&self, row: usize, col: usize) -> [f64; 2] {
        cell_centre(self.n(), row, col)
    }
}

fn cell_centre(n: usize, row: usize, col: usize) -> [f64; 2] {
    let step = 2.0 * GRID_EXTENT / n as f64;
    [-GRID_EXTENT + (col as f64 + 0.5) * step, GRID_EXTENT - (row as f64 + 0.5) * step]
}

/// Inverse-distance-squared interpolation from the 8 nearest channels.
///
/// # Panics
/// If `grid_n < 16`.
pub fn interpolate_scalp(frame: &TopographyFrame, grid_n: usize) -> ScalpGrid {
    assert!(grid_n >= 16, "grid_n must be at least 16, got {grid_n}");
    let pos: Vec<[f64; 2]> = frame.montage.channels().iter().map(|c| c.position).collect();
    let mut values = Array2::from_elem((grid_n, grid_n), f64::NAN);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(pos.len());
    for row in 0..grid_n {
        for col in 0..grid_n {
            let [x, y] = cell_centre(grid_n, row, col);
            if x.hypot(y) > GRID_EXTENT {
                continue;
            }
            dist.clear();
            dist.extend(pos.iter().enumerate().map(|(i, p)| ((p[0] - x).powi(2) + (p[1] - y).powi(2), i)));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let near = &dist[..IDW_NEIGHBOURS.min(dist.len())];
            values[[row, col]] = if near[0].0 < 1e-24 {
                frame.values[near[0].1]
            } else {
                let (num, den) =
                    near.iter().fold((0.0, 0.0), |(n, d), &(d2, i)| (n + frame.values[i] / d2, d + 1.0 / d2));
                num / den
            };
        }
    }
    ScalpGrid { values }
}
