//! `.vhdr` header parsing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{decode_text, unescape_field, Ini, IoError};
use crate::montage::MICROVOLT;
use crate::types::SessionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryFormat {
    Int16,
    Float32,
}

impl BinaryFormat {
    pub fn bytes_per_sample(self) -> usize {
        match self {
            BinaryFormat::Int16 => 2,
            BinaryFormat::Float32 => 4,
        }
    }

    pub(crate) fn keyword(self) -> &'static str {
        match self {
            BinaryFormat::Int16 => "INT_16",
            BinaryFormat::Float32 => "IEEE_FLOAT_32",
        }
    }
}

/// Multiplexed data is sample-major (`ch1 s1, ch2 s1, ...`), vectorized data
/// is channel-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Multiplexed,
    Vectorized,
}

impl Orientation {
    pub(crate) fn keyword(self) -> &'static str {
        match self {
            Orientation::Multiplexed => "MULTIPLEXED",
            Orientation::Vectorized => "VECTORIZED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub label: String,
    pub reference: String,
    pub resolution_uv: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaderSpec {
    pub n_channels: usize,
    pub sampling_interval_us: f64,
    pub binary_format: BinaryFormat,
    pub orientation: Orientation,
    pub channel_entries: Vec<ChannelEntry>,
    pub data_file: Option<String>,
    pub marker_file: Option<String>,
    /// From the `[Session Infos]` extension section, when present.
    pub session_kind: Option<SessionKind>,
    /// Exact rate from `[Session Infos]`; the interval alone can lose bits.
    pub declared_rate_hz: Option<f64>,
}

impl HeaderSpec {
    pub fn sample_rate_hz(&self) -> f64 {
        let from_interval = 1e6 / self.sampling_interval_us;
        match self.declared_rate_hz {
            Some(r) if (r - from_interval).abs() <= 1e-9 * from_interval => r,
            _ => from_interval,
        }
    }
}

fn invalid(key: &str, value: &str) -> IoError {
    IoError::InvalidValue { key: key.to_string(), value: value.to_string() }
}

/// Parses header bytes (Latin-1, or UTF-8 when the file says so).
pub fn parse_header_bytes(bytes: &[u8]) -> Result<HeaderSpec, IoError> {
    parse_header(&decode_text(bytes))
}

pub fn parse_header(text: &str) -> Result<HeaderSpec, IoError> {
    let ini = Ini::parse(text);
    const COMMON: &str = "Common Infos";

    let n_raw = ini.require(COMMON, "NumberOfChannels")?;
    let n_channels: usize = n_raw.parse().map_err(|_| invalid("NumberOfChannels", n_raw))?;
    if n_channels == 0 {
        return Err(invalid("NumberOfChannels", n_raw));
    }
    let si_raw = ini.require(COMMON, "SamplingInterval")?;
    let sampling_interval_us: f64 = si_raw.parse().map_err(|_| invalid("SamplingInterval", si_raw))?;
    if !(sampling_interval_us > 0.0) || !sampling_interval_us.is_finite() {
        return Err(invalid("SamplingInterval", si_raw));
    }

    let data_format = ini.require(COMMON, "DataFormat")?;
    if !data_format.eq_ignore_ascii_case("BINARY") {
        return Err(IoError::UnsupportedFormat(format!("DataFormat={data_format}")));
    }
    let orient = ini.require(COMMON, "DataOrientation")?;
    let orientation = if orient.eq_ignore_ascii_case("MULTIPLEXED") {
        Orientation::Multiplexed
    } else if orient.eq_ignore_ascii_case("VECTORIZED") {
        Orientation::Vectorized
    } else {
        return Err(IoError::UnsupportedFormat(format!("DataOrientation={orient}")));
    };
    if let Some(dt) = ini.get(COMMON, "DataType") {
        if !dt.eq_ignore_ascii_case("TIMEDOMAIN") {
            return Err(IoError::UnsupportedFormat(format!("DataType={dt}")));
        }
    }

    let bf = ini.require("Binary Infos", "BinaryFormat")?;
    let binary_format = if bf.eq_ignore_ascii_case("INT_16") {
        BinaryFormat::Int16
    } else if bf.eq_ignore_ascii_case("IEEE_FLOAT_32") {
        BinaryFormat::Float32
    } else {
        return Err(IoError::UnsupportedFormat(format!("BinaryFormat={bf}")));
    };
    if let Some(be) = ini.get("Binary Infos", "UseBigEndianOrder") {
        if be.eq_ignore_ascii_case("YES") {
            return Err(IoError::UnsupportedFormat("big-endian data".into()));
        }
    }

    let chan_section = ini.section("Channel Infos").ok_or_else(|| IoError::MissingSection("Channel Infos".into()))?;
    let mut entries: BTreeMap<usize, ChannelEntry> = BTreeMap::new();
    for l in chan_section {
        let Some(num) = l.key.get(..2).filter(|p| p.eq_ignore_ascii_case("ch")).map(|_| &l.key[2..]) else {
            continue;
        };
        let Ok(idx) = num.parse::<usize>() else { continue };
        let value = l.value.unwrap_or("");
        let fields: Vec<&str> = value.split(',').collect();
        let label = unescape_field(fields[0].trim());
        if label.is_empty() {
            return Err(invalid(l.key, value));
        }
        let reference = fields.get(1).map(|s| unescape_field(s.trim())).unwrap_or_default();
        let resolution_uv = match fields.get(2).map(|s| s.trim()) {
            None | Some("") => 1.0,
            Some(r) => r.parse::<f64>().map_err(|_| invalid(l.key, value))?,
        };
        if !(resolution_uv > 0.0) || !resolution_uv.is_finite() {
            return Err(invalid(l.key, value));
        }
        let unit = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => MICROVOLT.to_string(),
            Some(u) => u.to_string(),
        };
        if entries.insert(idx, ChannelEntry { label, reference, resolution_uv, unit }).is_some() {
            return Err(invalid(l.key, value));
        }
    }
    if entries.len() != n_channels {
        return Err(IoError::ChannelCountMismatch { declared: n_channels, listed: entries.len() });
    }
    if let Some(missing) = (1..=n_channels).find(|i| !entries.contains_key(i)) {
        return Err(IoError::MissingKey { section: "Channel Infos".into(), key: format!("Ch{missing}") });
    }

    let session_kind = match ini.get("Session Infos", "SessionKind") {
        Some(s) => Some(s.parse().map_err(|_| invalid("SessionKind", s))?),
        None => None,
    };
    let declared_rate_hz = ini
        .get("Session Infos", "SamplingRateHz")
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|r| *r > 0.0 && r.is_finite());

    Ok(HeaderSpec {
        n_channels,
        sampling_interval_us,
        binary_format,
        orientation,
        channel_entries: entries.into_values().collect(),
        data_file: ini.get(COMMON, "DataFile").filter(|s| !s.is_empty()).map(str::to_string),
        marker_file: ini.get(COMMON, "MarkerFile").filter(|s| !s.is_empty()).map(str::to_string),
        session_kind,
        declared_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "Brain Vision Data Exchange Header File Version 1.0\r\n\
        [Common Infos]\r\n\
        DataFile=x.eeg\r\n\
        DataFormat=BINARY\r\n\
        DataOrientation=MULTIPLEXED\r\n\
        NumberOfChannels=2\r\n\
        SamplingInterval=1000\r\n\
        \r\n\
        [Binary Infos]\r\n\
        BinaryFormat=INT_16\r\n\
        \r\n\
        [Channel Infos]\r\n\
        ; Each entry: Ch<Channel number>=<Name>,<Reference channel name>,<Resolution>,<Unit>\r\n\
        Ch1=Oz,,0.5,\u{b5}V\r\n\
        Ch2=O1\\1x,,0.5\r\n";

    #[test]
    fn minimal_header() {
        let h = parse_header(MINIMAL).unwrap();
        assert_eq!(h.n_channels, 2);
        assert_eq!(h.sampling_interval_us, 1000.0);
        assert_eq!(h.sample_rate_hz(), 1000.0);
        assert_eq!(h.binary_format, BinaryFormat::Int16);
        assert_eq!(h.orientation, Orientation::Multiplexed);
        assert_eq!(h.channel_entries[0].label, "Oz");
        assert_eq!(h.channel_entries[0].resolution_uv, 0.5);
        assert_eq!(h.channel_entries[1].label, "O1,x");
        assert_eq!(h.channel_entries[1].unit, MICROVOLT);
        assert_eq!(h.data_file.as_deref(), Some("x.eeg"));
        assert_eq!(h.marker_file, None);
        assert_eq!(h.session_kind, None);
    }

    #[test]
    fn channel_count_mismatch() {
        let text = MINIMAL.replace("NumberOfChannels=2", "NumberOfChannels=3");
        assert!(matches!(parse_header(&text), Err(IoError::ChannelCountMismatch { declared: 3, listed: 2 })));
    }

    #[test]
    fn ascii_is_unsupported() {
        let text = MINIMAL.replace("DataFormat=BINARY", "DataFormat=ASCII");
        assert!(matches!(parse_header(&text), Err(IoError::UnsupportedFormat(_))));
        let text = MINIMAL.replace("INT_16", "UINT_16");
        assert!(matches!(parse_header(&text), Err(IoError::UnsupportedFormat(_))));
    }

    #[test]
    fn missing_pieces() {
        let text = MINIMAL.replace("SamplingInterval=1000", "");
        assert!(matches!(parse_header(&text), Err(IoError::MissingKey { key, .. }) if key == "SamplingInterval"));
        let text = MINIMAL.replace("[Binary Infos]", "[Other]");
        assert!(matches!(parse_header(&text), Err(IoError::MissingSection(s)) if s == "Binary Infos"));
        let text = MINIMAL.replace("Ch2=", "Ch3=");
        assert!(matches!(parse_header(&text), Err(IoError::MissingKey { key, .. }) if key == "Ch2"));
        assert!(matches!(parse_header(""), Err(IoError::MissingSection(_))));
    }

    #[test]
    fn bad_values() {
        for (from, to) in [
            ("SamplingInterval=1000", "SamplingInterval=-1"),
            ("SamplingInterval=1000", "SamplingInterval=abc"),
            ("NumberOfChannels=2", "NumberOfChannels=0"),
            ("Ch1=Oz,,0.5", "Ch1=Oz,,0"),
            ("Ch1=Oz,,0.5", "Ch1=,,0.5"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(parse_header(&text), Err(IoError::InvalidValue { .. })), "{to}");
        }
    }

    #[test]
    fn lf_only_and_session_extension() {
        let text = MINIMAL.replace("\r\n", "\n") + "[Session Infos]\nSessionKind=Perception\nSamplingRateHz=1000\n";
        let h = parse_header(&text).unwrap();
        assert_eq!(h.session_kind, Some(SessionKind::Perception));
        assert_eq!(h.declared_rate_hz, Some(1000.0));
    }
}
