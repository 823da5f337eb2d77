//! Event-related spectral perturbation and alpha-band scalp topography.

mod ersp;
mod render;
mod topo;

pub use ersp::{compute_ersp, ersp_from_recording, hann_power, BaselineInfo, ErspResult};
pub use render::{ersp_csv, frame_csv, grid_csv, heatmap_svg, ramp_color, scalp_svg, DB_CLIP, RAMP_STEPS};
pub use topo::{
    alpha_topography, interpolate_scalp, topography_epochs, ScalpGrid, TopoMode, TopographyFrame, GRID_EXTENT,
    TOPO_MARGIN_S,
};

use thiserror::Error;

use crate::dsp::DspError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimefreqError {
    #[error("trial {trial} has no rest baseline of {needed_ms} ms before its onset")]
    MissingBaseline { trial: usize, needed_ms: f64 },
    #[error("epoch of {samples} samples is too short, need at least {needed}")]
    EpochTooShort { samples: usize, needed: usize },
    #[error("unknown channel `{label}`; valid labels: {}", valid.join(", "))]
    UnknownChannel { label: String, valid: Vec<String> },
    #[error("window ({0} ms, {1} ms) lies outside the epoch ({2} s, {3} s)")]
    WindowOutOfEpoch(f64, f64, f64, f64),
    #[error("zero or non-finite power at {freq_hz} Hz")]
    DegeneratePower { freq_hz: f64 },
    #[error("{epochs} epochs but {baselines} baseline segments")]
    BaselineCountMismatch { epochs: usize, baselines: usize },
    #[error("no trials")]
    NoTrials,
    #[error(transparent)]
    Dsp(#[from] DspError),
}

fn unknown_channel(label: &str, montage: &crate::montage::Montage) -> TimefreqError {
    TimefreqError::UnknownChannel { label: label.to_string(), valid: montage.labels().map(str::to_string).collect() }
}
