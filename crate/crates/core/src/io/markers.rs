//! `.vmrk` marker parsing and the stimulus-code mapping.

use serde::{Deserialize, Serialize};

use super::{decode_text, unescape_field, Ini, IoError};
use crate::types::ClassLabel;

/// One `Mk<n>=<type>,<description>,<position>,<length>,<channel>` entry.
/// Positions are 1-based, exactly as in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMarker {
    pub index: usize,
    pub type_str: String,
    pub description: String,
    pub position_sample: usize,
    pub length_samples: usize,
    pub channel: usize,
}

pub fn parse_markers_bytes(bytes: &[u8]) -> Result<Vec<RawMarker>, IoError> {
    parse_markers(&decode_text(bytes))
}

pub fn parse_markers(text: &str) -> Result<Vec<RawMarker>, IoError> {
    let ini = Ini::parse(text);
    let section = ini.section("Marker Infos").ok_or_else(|| IoError::MissingSection("Marker Infos".into()))?;
    let mut out: Vec<RawMarker> = Vec::with_capacity(section.len());
    for l in section {
        let malformed = |reason: &str| IoError::MalformedLine { line: l.line, reason: reason.to_string() };
        let Some(value) = l.value else {
            return Err(malformed("expected Mk<n>=<fields>"));
        };
        let is_mk = l.key.get(..2).is_some_and(|p| p.eq_ignore_ascii_case("mk"));
        if !is_mk {
            continue;
        }
        let index: usize = l.key[2..].parse().map_err(|_| malformed("marker number is not an integer"))?;
        let fields: Vec<&str> = value.split(',').collect();
        if fields.len() < 5 {
            return Err(malformed("marker needs type, description, position, length and channel"));
        }
        let int = |s: &str, what: &str| {
            s.trim().parse::<usize>().map_err(|_| malformed(&format!("{what} is not an integer")))
        };
        let position_sample = int(fields[2], "position")?;
        if position_sample == 0 {
            return Err(malformed("positions are 1-based"));
        }
        let length_samples = int(fields[3], "length")?;
        let channel = int(fields[4], "channel")?;
        if let Some(prev) = out.last() {
            if index <= prev.index {
                return Err(malformed("marker numbers must increase"));
            }
        }
        out.push(RawMarker {
            index,
            type_str: unescape_field(fields[0].trim()),
            description: unescape_field(fields[1].trim()),
            position_sample,
            length_samples,
            channel,
        });
    }
    Ok(out)
}

/// Stimulus descriptions for the four classes and the rest-phase onset.
/// Matching ignores whitespace, so `S  1` and `S1` are the same code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerMap {
    pub classes: Vec<(String, ClassLabel)>,
    pub rest: String,
}

impl Default for MarkerMap {
    fn default() -> Self {
        Self {
            classes: vec![
                ("S  1".into(), ClassLabel::EatingFood),
                ("S  2".into(), ClassLabel::OpeningDoor),
                ("S  3".into(), ClassLabel::PickingUpPhone),
                ("S  4".into(), ClassLabel::PouringWater),
            ],
            rest: "S 10".into(),
        }
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

impl MarkerMap {
    pub fn class_of(&self, description: &str) -> Option<ClassLabel> {
        let d = squash(description);
        self.classes.iter().find(|(code, _)| squash(code) == d).map(|(_, c)| *c)
    }

    pub fn is_rest(&self, description: &str) -> bool {
        squash(description) == squash(&self.rest)
    }

    pub fn code_of(&self, class: ClassLabel) -> Option<&str> {
        self.classes.iter().find(|(_, c)| *c == class).map(|(code, _)| code.as_str())
    }

    /// Replaces the code for `class`.
    pub fn set(&mut self, class: ClassLabel, code: &str) {
        self.classes.retain(|(_, c)| *c != class);
        self.classes.push((code.to_string(), class));
        self.classes.sort_by_key(|(_, c)| *c);
    }
}
