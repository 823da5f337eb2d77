//! BrainVision reading and writing (`.vhdr` / `.vmrk` / `.eeg`) and epoch
//! exports.

mod export;
mod header;
mod markers;
mod recording;

pub use export::{export_epochs, format_sig, import_epochs_json, ExportLayout};
pub use header::{parse_header, parse_header_bytes, BinaryFormat, ChannelEntry, HeaderSpec, Orientation};
pub use markers::{parse_markers, parse_markers_bytes, MarkerMap, RawMarker};
pub use recording::{
    read_brainvision, read_recording, write_brainvision, write_recording, BrainVisionText, Encoding, WriteOptions,
    INT16_RESOLUTIONS_UV,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::types::EpochError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("header declares {declared} channels but lists {listed}")]
    ChannelCountMismatch { declared: usize, listed: usize },
    #[error("unsupported data format: {0}")]
    UnsupportedFormat(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("binary length {bytes} is not a multiple of the {frame}-byte sample frame")]
    LengthMismatch { bytes: usize, frame: usize },
    #[error("marker Mk{index}: stimulus description `{description}` has no class mapping")]
    UnknownMarkerDescription { index: usize, description: String },
    #[error("marker Mk{index} at position {position} lies outside the {n_samples}-sample recording")]
    MarkerOutOfRange { index: usize, position: usize, n_samples: usize },
    #[error("channel `{0}` is not part of the montage")]
    ChannelNotInMontage(String),
    #[error("channel `{0}` is listed twice")]
    DuplicateChannel(String),
    #[error("peak amplitude {max_abs_uv} uV does not fit 16-bit samples at {resolution_uv} uV/bit")]
    DynamicRangeOverflow { max_abs_uv: f64, resolution_uv: f64 },
    #[error("character {0:?} cannot be written as Latin-1")]
    NotLatin1(char),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Epoch(#[from] EpochError),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
}

/// Every byte maps to the code point of the same value.
pub fn decode_latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| char::from(b)).collect()
}

pub fn encode_latin1(text: &str) -> Result<Vec<u8>, IoError> {
    text.chars().map(|c| u8::try_from(u32::from(c)).map_err(|_| IoError::NotLatin1(c))).collect()
}

/// Decodes header/marker bytes. Files that declare `Codepage=UTF-8` are
/// decoded as UTF-8 (lossy), everything else as Latin-1.
pub(crate) fn decode_text(bytes: &[u8]) -> String {
    let latin = decode_latin1(bytes);
    let utf8 = latin.lines().any(|l| {
        let l = l.trim();
        match (l.get(..9), l.get(9..)) {
            (Some(key), Some(value)) => {
                key.eq_ignore_ascii_case("codepage=") && value.trim().eq_ignore_ascii_case("utf-8")
            }
            _ => false,
        }
    });
    if utf8 {
        String::from_utf8_lossy(bytes).into_owned()
    } else {
        latin
    }
}

/// Key/value lines grouped by section. Section and key lookups ignore ASCII
/// case; `;` starts a comment line.
pub(crate) struct Ini<'a> {
    sections: Vec<(&'a str, Vec<IniLine<'a>>)>,
}

pub(crate) struct IniLine<'a> {
    /// 1-based line number in the source text.
    pub line: usize,
    pub key: &'a str,
    /// `None` for lines without `=`.
    pub value: Option<&'a str>,
}

impl<'a> Ini<'a> {
    pub fn parse(text: &'a str) -> Self {
        let mut sections: Vec<(&'a str, Vec<IniLine<'a>>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') && line.len() >= 2 {
                sections.push((line[1..line.len() - 1].trim(), Vec::new()));
                continue;
            }
            let Some((_, entries)) = sections.last_mut() else { continue };
            let entry = match line.split_once('=') {
                Some((k, v)) => IniLine { line: i + 1, key: k.trim(), value: Some(v.trim()) },
                None => IniLine { line: i + 1, key: line, value: None },
            };
            entries.push(entry);
        }
        Self { sections }
    }

    pub fn section(&self, name: &str) -> Option<&[IniLine<'a>]> {
        self.sections.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, e)| e.as_slice())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&'a str> {
        self.section(section)?.iter().find(|l| l.key.eq_ignore_ascii_case(key)).and_then(|l| l.value)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&'a str, IoError> {
        if self.section(section).is_none() {
            return Err(IoError::MissingSection(section.to_string()));
        }
        self.get(section, key).ok_or_else(|| IoError::MissingKey { section: section.to_string(), key: key.to_string() })
    }
}

/// BrainVision escapes commas inside fields as `\1`.
pub(crate) fn unescape_field(s: &str) -> String {
    s.replace("\\1", ",")
}

pub(crate) fn escape_field(s: &str) -> String {
    s.replace(',', "\\1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latin1_roundtrip() {
        let s = "Fp1 \u{b5}V caf\u{e9}";
        let bytes = encode_latin1(s).unwrap();
        assert_eq!(bytes.len(), s.chars().count());
        assert_eq!(decode_latin1(&bytes), s);
        assert!(matches!(encode_latin1("\u{3bc}"), Err(IoError::NotLatin1('\u{3bc}'))));
    }

    #[test]
    fn utf8_codepage_is_honoured() {
        let text = "[Common Infos]\r\nCodepage=UTF-8\r\nX=\u{b5}V\r\n";
        assert_eq!(decode_text(text.as_bytes()), text);
        let latin = encode_latin1("[Common Infos]\nX=\u{b5}V\n").unwrap();
        assert!(decode_text(&latin).contains("\u{b5}V"));
    }

    #[test]
    fn non_ascii_lines_do_not_break_codepage_sniffing() {
        // high bytes decode to two-byte chars, so byte 9 can fall inside one
        let bytes = b"\xe9\xe9\xe9\xe9\xe9=UTF-8\n[Common Infos]\n";
        assert!(decode_text(bytes).starts_with('\u{e9}'));
        assert!(parse_header_bytes(bytes).is_err());
        let _ = parse_markers_bytes(bytes);
    }

    #[test]
    fn ini_sections_and_comments() {
        let text = "Title line\r\n[A]\r\n; comment\r\nkey = 1\r\nfree text\r\n[B]\nk=v=w\n";
        let ini = Ini::parse(text);
        assert_eq!(ini.get("a", "KEY"), Some("1"));
        assert_eq!(ini.get("B", "k"), Some("v=w"));
        assert!(matches!(ini.require("C", "k"), Err(IoError::MissingSection(_))));
        assert!(matches!(ini.require("A", "x"), Err(IoError::MissingKey { .. })));
        assert_eq!(ini.section("A").unwrap()[1].value, None);
        assert_eq!(ini.section("A").unwrap()[1].line, 5);
    }
}
