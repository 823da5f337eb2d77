//! 10-10 electrode montage and the default 64-channel layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit every channel is expressed in.
pub const MICROVOLT: &str = "\u{b5}V";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub label: String,
    /// Azimuthal-equidistant scalp projection, vertex at the origin, nose
    /// towards +y, the Fpz-T7-Oz circle at radius 1.
    pub position: [f64; 2],
    pub unit: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MontageError {
    #[error("duplicate channel label `{0}`")]
    DuplicateLabel(String),
    #[error("occipital cluster label `{0}` is not a channel of the montage")]
    UnknownClusterLabel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Montage {
    channels: Vec<ChannelInfo>,
    occipital_cluster: Vec<String>,
}

impl Montage {
    pub fn new(channels: Vec<ChannelInfo>, occipital_cluster: Vec<String>) -> Result<Self, MontageError> {
        for (i, ch) in channels.iter().enumerate() {
            if channels[..i].iter().any(|c| c.label == ch.label) {
                return Err(MontageError::DuplicateLabel(ch.label.clone()));
            }
        }
        for label in &occipital_cluster {
            if !channels.iter().any(|c| &c.label == label) {
                return Err(MontageError::UnknownClusterLabel(label.clone()));
            }
        }
        Ok(Self { channels, occipital_cluster })
    }

    pub fn channels(&self) -> &[ChannelInfo] {
        &self.channels
    }

    pub fn occipital_cluster(&self) -> &[String] {
        &self.occipital_cluster
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label.eq_ignore_ascii_case(label))
    }

    /// Channel indices of the occipital cluster, in cluster order.
    pub fn occipital_indices(&self) -> Vec<usize> {
        self.occipital_cluster.iter().filter_map(|l| self.index_of(l)).collect()
    }

    /// Sub-montage restricted to `labels`, in that order. Cluster members not
    /// kept are dropped from the cluster.
    pub fn subset(&self, labels: &[&str]) -> Option<Self> {
        let channels: Vec<ChannelInfo> =
            labels.iter().map(|l| self.index_of(l).map(|i| self.channels[i].clone())).collect::<Option<_>>()?;
        let occipital_cluster =
            self.occipital_cluster.iter().filter(|l| channels.iter().any(|c| &c.label == *l)).cloned().collect();
        Self::new(channels, occipital_cluster).ok()
    }
}

pub const DEFAULT_OCCIPITAL_CLUSTER: [&str; 8] = ["O1", "Oz", "O2", "PO3", "POz", "PO4", "PO7", "PO8"];

// Idealized 10-10 sphere: midline rows 22.5 deg apart from the vertex, row
// end points every 18 deg on the Fpz-T7-Oz circle, intermediate columns
// equally spaced along each row arc. Radius = polar angle / 90 deg. FCz is
// the recording reference and is not listed.
const DEFAULT_POSITIONS: [(&str, f64, f64); 64] = [
    ("Fp1", -0.309017, 0.951057),
    ("Fpz", 0.000000, 1.000000),
    ("Fp2", 0.309017, 0.951057),
    ("AF7", -0.587785, 0.809017),
    ("AF5", -0.449769, 0.780092),
    ("AF3", -0.303606, 0.762464),
    ("AFz", 0.000000, 0.750000),
    ("AF4", 0.303606, 0.762464),
    ("AF6", 0.449769, 0.780092),
    ("AF8", 0.587785, 0.809017),
    ("F7", -0.809017, 0.587785),
    ("F5", -0.616987, 0.542411),
    ("F3", -0.415226, 0.516962),
    ("F1", -0.208634, 0.503985),
    ("Fz", 0.000000, 0.500000),
    ("F2", 0.208634, 0.503985),
    ("F4", 0.415226, 0.516962),
    ("F6", 0.616987, 0.542411),
    ("F8", 0.809017, 0.587785),
    ("FT7", -0.951057, 0.309017),
    ("FC5", -0.716922, 0.277438),
    ("FC3", -0.479251, 0.260723),
    ("FC1", -0.239955, 0.252488),
    ("FC2", 0.239955, 0.252488),
    ("FC4", 0.479251, 0.260723),
    ("FC6", 0.716922, 0.277438),
    ("FT8", 0.951057, 0.309017),
    ("T7", -1.000000, 0.000000),
    ("C5", -0.750000, 0.000000),
    ("C3", -0.500000, 0.000000),
    ("C1", -0.250000, 0.000000),
    ("Cz", 0.000000, 0.000000),
    ("C2", 0.250000, 0.000000),
    ("C4", 0.500000, 0.000000),
    ("C6", 0.750000, 0.000000),
    ("T8", 1.000000, 0.000000),
    ("TP7", -0.951057, -0.309017),
    ("CP5", -0.716922, -0.277438),
    ("CP3", -0.479251, -0.260723),
    ("CP1", -0.239955, -0.252488),
    ("CPz", 0.000000, -0.250000),
    ("CP2", 0.239955, -0.252488),
    ("CP4", 0.479251, -0.260723),
    ("CP6", 0.716922, -0.277438),
    ("TP8", 0.951057, -0.309017),
    ("P7", -0.809017, -0.587785),
    ("P5", -0.616987, -0.542411),
    ("P3", -0.415226, -0.516962),
    ("P1", -0.208634, -0.503985),
    ("Pz", 0.000000, -0.500000),
    ("P2", 0.208634, -0.503985),
    ("P4", 0.415226, -0.516962),
    ("P6", 0.616987, -0.542411),
    ("P8", 0.809017, -0.587785),
    ("PO7", -0.587785, -0.809017),
    ("PO5", -0.449769, -0.780092),
    ("PO3", -0.303606, -0.762464),
    ("POz", 0.000000, -0.750000),
    ("PO4", 0.303606, -0.762464),
    ("PO6", 0.449769, -0.780092),
    ("PO8", 0.587785, -0.809017),
    ("O1", -0.309017, -0.951057),
    ("Oz", 0.000000, -1.000000),
    ("O2", 0.309017, -0.951057),
];

/// Standard 64-channel layout with projected positions and the default
/// occipital cluster.
pub fn default_montage() -> Montage {
    let channels = DEFAULT_POSITIONS
        .iter()
        .map(|&(label, x, y)| ChannelInfo { label: label.to_string(), position: [x, y], unit: MICROVOLT.to_string() })
        .collect();
    let cluster = DEFAULT_OCCIPITAL_CLUSTER.iter().map(|s| s.to_string()).collect();
    Montage::new(channels, cluster).expect("default montage table is consistent")
}
