//! Shared data model: class labels, markers, recordings and epoch tensors.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::montage::Montage;

/// The four visual-motion classes, in the fixed order used for tie-breaking,
/// report rows and one-vs-rest entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    EatingFood,
    OpeningDoor,
    PickingUpPhone,
    PouringWater,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] =
        [ClassLabel::EatingFood, ClassLabel::OpeningDoor, ClassLabel::PickingUpPhone, ClassLabel::PouringWater];

    /// Position in the fixed class order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Human-readable row label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassLabel::EatingFood => "Eating food",
            ClassLabel::OpeningDoor => "Opening door",
            ClassLabel::PickingUpPhone => "Picking up a phone",
            ClassLabel::PouringWater => "Pouring water",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassLabel::EatingFood => "EatingFood",
            ClassLabel::OpeningDoor => "OpeningDoor",
            ClassLabel::PickingUpPhone => "PickingUpPhone",
            ClassLabel::PouringWater => "PouringWater",
        };
        f.write_str(s)
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "eatingfood" | "eating" => Ok(ClassLabel::EatingFood),
            "openingdoor" | "opening" | "door" => Ok(ClassLabel::OpeningDoor),
            "pickingupphone" | "pickingupaphone" | "phone" => Ok(ClassLabel::PickingUpPhone),
            "pouringwater" | "pouring" | "water" => Ok(ClassLabel::PouringWater),
            _ => Err(format!("unknown class label `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionKind {
    Perception,
    Imagery,
}

impl fmt::Display for SessionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionKind::Perception => f.write_str("Perception"),
            SessionKind::Imagery => f.write_str("Imagery"),
        }
    }
}

impl FromStr for SessionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perception" => Ok(SessionKind::Perception),
            "imagery" => Ok(SessionKind::Imagery),
            _ => Err(format!("unknown session kind `{s}`")),
        }
    }
}

impl SessionKind {
    /// Marker kind that opens the task phase of a trial in this session.
    pub fn onset_kind(self) -> MarkerKind {
        match self {
            SessionKind::Perception => MarkerKind::StimulusOnset,
            SessionKind::Imagery => MarkerKind::CueOnset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarkerKind {
    RestOnset,
    CueOnset,
    StimulusOnset,
}

impl MarkerKind {
    pub fn carries_class(self) -> bool {
        matches!(self, MarkerKind::CueOnset | MarkerKind::StimulusOnset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerEvent {
    /// 0-based sample index.
    pub sample_index: usize,
    pub kind: MarkerKind,
    pub class_label: Option<ClassLabel>,
}

/// Multichannel recording in microvolts, `data` is `[n_channels, n_samples]`.
///
/// Fields are public so that malformed recordings can be represented and
/// reported by [`validate_recording`]. Samples are stored as `f32`, which is
/// the native precision of the float BrainVision format.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRecording {
    pub montage: Montage,
    pub sample_rate_hz: f64,
    pub data: Array2<f32>,
    pub markers: Vec<MarkerEvent>,
    pub session_kind: SessionKind,
}

impl ContinuousRecording {
    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.montage.index_of(label)
    }
}

/// One broken invariant found by [`validate_recording`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ChannelCountMismatch { montage_channels: usize, data_rows: usize },
    NonPositiveSampleRate,
    DuplicateChannelLabel { channel: usize, label: String },
    MarkerOutOfRange { marker: usize, sample_index: usize, n_samples: usize },
    MarkerNotIncreasing { marker: usize, sample_index: usize, previous: usize },
    MarkerClassMismatch { marker: usize },
    OccipitalLabelMissing { label: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ChannelCountMismatch { montage_channels, data_rows } => {
                write!(f, "channel count mismatch: montage has {montage_channels} channels, data has {data_rows} rows")
            }
            Violation::NonPositiveSampleRate => f.write_str("sample rate must be positive"),
            Violation::DuplicateChannelLabel { channel, label } => {
                write!(f, "duplicate channel label `{label}` at channel {channel}")
            }
            Violation::MarkerOutOfRange { marker, sample_index, n_samples } => {
                write!(f, "marker {marker} at sample {sample_index} is beyond the recording ({n_samples} samples)")
            }
            Violation::MarkerNotIncreasing { marker, sample_index, previous } => {
                write!(f, "marker {marker} at sample {sample_index} does not follow previous marker at {previous}")
            }
            Violation::MarkerClassMismatch { marker } => {
                write!(f, "marker {marker}: class label must be present exactly for cue/stimulus onsets")
            }
            Violation::OccipitalLabelMissing { label } => {
                write!(f, "occipital cluster label `{label}` is not a montage channel")
            }
        }
    }
}

/// Checks every [`ContinuousRecording`] invariant. An empty list means the
/// recording is well formed.
pub fn validate_recording(rec: &ContinuousRecording) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_ch = rec.montage.len();
    if rec.data.nrows() != n_ch {
        out.push(Violation::ChannelCountMismatch { montage_channels: n_ch, data_rows: rec.data.nrows() });
    }
    if !(rec.sample_rate_hz > 0.0) || !rec.sample_rate_hz.is_finite() {
        out.push(Violation::NonPositiveSampleRate);
    }
    for (i, ch) in rec.montage.channels().iter().enumerate() {
        if rec.montage.channels()[..i].iter().any(|c| c.label == ch.label) {
            out.push(Violation::DuplicateChannelLabel { channel: i, label: ch.label.clone() });
        }
    }
    for label in rec.montage.occipital_cluster() {
        if rec.montage.index_of(label).is_none() {
            out.push(Violation::OccipitalLabelMissing { label: label.clone() });
        }
    }
    let n_samples = rec.data.ncols();
    let mut previous: Option<usize> = None;
    for (i, m) in rec.markers.iter().enumerate() {
        if m.sample_index >= n_samples {
            out.push(Violation::MarkerOutOfRange { marker: i, sample_index: m.sample_index, n_samples });
        }
        if let Some(prev) = previous {
            if m.sample_index <= prev {
                out.push(Violation::MarkerNotIncreasing { marker: i, sample_index: m.sample_index, previous: prev });
            }
        }
        if m.kind.carries_class() != m.class_label.is_some() {
            out.push(Violation::MarkerClassMismatch { marker: i });
        }
        previous = Some(m.sample_index);
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpochError {
    #[error("epoch window ({0}, {1}) s is not increasing")]
    InvalidWindow(f64, f64),
    #[error("sample rate must be positive, got {0}")]
    InvalidSampleRate(f64),
    #[error("epoch data has {actual} samples but window and rate imply {expected}")]
    SampleCountMismatch { expected: usize, actual: usize },
    #[error("{labels} labels for {trials} trials")]
    LabelCountMismatch { labels: usize, trials: usize },
    #[error("epoch data has {data} channels but montage has {montage}")]
    ChannelCountMismatch { data: usize, montage: usize },
    #[error("trial index {0} out of range")]
    TrialOutOfRange(usize),
}

/// Samples implied by a window: `round((t_end - t_start) * fs)`.
pub fn window_samples(window_s: (f64, f64), sample_rate_hz: f64) -> usize {
    ((window_s.1 - window_s.0) * sample_rate_hz).round().max(0.0) as usize
}

/// Trials x channels x samples tensor with labels and window metadata.
///
/// The only way to build one is [`EpochSet::new`], which rejects shapes that
/// contradict the window and sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    data: Array3<f64>,
    labels: Vec<ClassLabel>,
    window_s: (f64, f64),
    sample_rate_hz: f64,
    montage: Montage,
}

impl EpochSet {
    pub fn new(
        data: Array3<f64>,
        labels: Vec<ClassLabel>,
        window_s: (f64, f64),
        sample_rate_hz: f64,
        montage: Montage,
    ) -> Result<Self, EpochError> {
        if !(window_s.1 > window_s.0) || !window_s.0.is_finite() || !window_s.1.is_finite() {
            return Err(EpochError::InvalidWindow(window_s.0, window_s.1));
        }
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(EpochError::InvalidSampleRate(sample_rate_hz));
        }
        let (n_trials, n_channels, n_samples) = data.dim();
        let expected = window_samples(window_s, sample_rate_hz);
        if n_samples != expected {
            return Err(EpochError::SampleCountMismatch { expected, actual: n_samples });
        }
        if labels.len() != n_trials {
            return Err(EpochError::LabelCountMismatch { labels: labels.len(), trials: n_trials });
        }
        if n_channels != montage.len() {
            return Err(EpochError::ChannelCountMismatch { data: n_channels, montage: montage.len() });
        }
        Ok(Self { data, labels, window_s, sample_rate_hz, montage })
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn window_s(&self) -> (f64, f64) {
        self.window_s
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn montage(&self) -> &Montage {
        &self.montage
    }

    pub fn n_trials(&self) -> usize {
        self.data.dim().0
    }

    pub fn n_channels(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_samples(&self) -> usize {
        self.data.dim().2
    }

    /// `[n_channels, n_samples]` view of one trial.
    pub fn trial(&self, i: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), i)
    }

    /// Count of trials per class, in class order.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// New set holding the given trials (in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<Self, EpochError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_trials()) {
            return Err(EpochError::TrialOutOfRange(bad));
        }
        let data = self.data.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Self {
            data,
            labels,
            window_s: self.window_s,
            sample_rate_hz: self.sample_rate_hz,
            montage: self.montage.clone(),
        })
    }

    /// Same data, different labels.
    pub fn with_labels(&self, labels: Vec<ClassLabel>) -> Result<Self, EpochError> {
        Self::new(self.data.clone(), labels, self.window_s, self.sample_rate_hz, self.montage.clone())
    }

    /// Applies `f` to every trial/channel row; used for filtering.
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self, crate::dsp::DspError>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>, crate::dsp::DspError>,
    {
        let mut out = self.data.clone();
        for mut trial in out.outer_iter_mut() {
            for mut row in trial.outer_iter_mut() {
                let src = row.to_vec();
                let filtered = f(&src)?;
                row.assign(&ndarray::ArrayView1::from(&filtered[..]));
            }
        }
        Ok(Self {
            data: out,
            labels: self.labels.clone(),
            window_s: self.window_s,
            sample_rate_hz: self.sample_rate_hz,
            montage: self.montage.clone(),
        })
    }

    pub fn into_parts(self) -> (Array3<f64>, Vec<ClassLabel>, (f64, f64), f64, Montage) {
        (self.data, self.labels, self.window_s, self.sample_rate_hz, self.montage)
    }
}
