//! Binary sample decoding/encoding and whole-recording read/write.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::header::{BinaryFormat, HeaderSpec, Orientation};
use super::markers::{MarkerMap, RawMarker};
use super::{encode_latin1, escape_field, parse_header_bytes, parse_markers_bytes, IoError};
use crate::montage::{Montage, MICROVOLT};
use crate::types::{ContinuousRecording, MarkerEvent, MarkerKind, SessionKind};

/// Amplifier resolutions tried, finest first, when writing 16-bit data
/// without an explicit resolution.
pub const INT16_RESOLUTIONS_UV: [f64; 4] = [0.1, 0.5, 10.0, 152.6];

fn unit_scale(unit: &str) -> Result<f64, IoError> {
    match unit {
        "\u{b5}V" | "uV" | "\u{3bc}V" | "\u{c2}\u{b5}V" => Ok(1.0),
        "mV" => Ok(1e3),
        "V" => Ok(1e6),
        "nV" => Ok(1e-3),
        other => Err(IoError::UnsupportedFormat(format!("unit `{other}`"))),
    }
}

/// Builds a recording from parsed header/markers and the raw `.eeg` bytes.
/// Channels take their positions from `montage`; Stimulus markers are mapped
/// through `map`, other marker types are ignored.
pub fn read_recording(
    header: &HeaderSpec,
    markers: &[RawMarker],
    binary: &[u8],
    montage: &Montage,
    map: &MarkerMap,
) -> Result<ContinuousRecording, IoError> {
    let n_ch = header.channel_entries.len();
    if n_ch == 0 || n_ch != header.n_channels {
        return Err(IoError::ChannelCountMismatch { declared: header.n_channels, listed: n_ch });
    }
    let labels: Vec<&str> = header.channel_entries.iter().map(|e| e.label.as_str()).collect();
    if let Some(missing) = labels.iter().find(|l| montage.index_of(l).is_none()) {
        return Err(IoError::ChannelNotInMontage(missing.to_string()));
    }
    let sub = montage.subset(&labels).ok_or_else(|| {
        let dup = labels
            .iter()
            .enumerate()
            .find(|(i, l)| labels[..*i].iter().any(|p| p.eq_ignore_ascii_case(l)))
            .map(|(_, l)| l.to_string())
            .unwrap_or_default();
        IoError::DuplicateChannel(dup)
    })?;

    let bps = header.binary_format.bytes_per_sample();
    let frame = n_ch * bps;
    if binary.len() % frame != 0 {
        return Err(IoError::LengthMismatch { bytes: binary.len(), frame });
    }
    let n_samples = binary.len() / frame;
    let scales: Vec<f64> = header
        .channel_entries
        .iter()
        .map(|e| Ok(e.resolution_uv * unit_scale(&e.unit)?))
        .collect::<Result<_, IoError>>()?;

    let mut data = Array2::<f32>::zeros((n_ch, n_samples));
    for (c, &scale) in scales.iter().enumerate() {
        let mut row = data.row_mut(c);
        for s in 0..n_samples {
            let k = match header.orientation {
                Orientation::Multiplexed => s * n_ch + c,
                Orientation::Vectorized => c * n_samples + s,
            } * bps;
            row[s] = match header.binary_format {
                BinaryFormat::Int16 => (f64::from(i16::from_le_bytes([binary[k], binary[k + 1]])) * scale) as f32,
                BinaryFormat::Float32 => {
                    let v = f32::from_le_bytes([binary[k], binary[k + 1], binary[k + 2], binary[k + 3]]);
                    if scale == 1.0 {
                        v
                    } else {
                        (f64::from(v) * scale) as f32
                    }
                }
            };
        }
    }

    let session_kind = header.session_kind.unwrap_or(SessionKind::Imagery);
    let mut events = Vec::new();
    for m in markers {
        if !m.type_str.eq_ignore_ascii_case("Stimulus") {
            continue;
        }
        let (kind, class_label) = if map.is_rest(&m.description) {
            (MarkerKind::RestOnset, None)
        } else if let Some(c) = map.class_of(&m.description) {
            (session_kind.onset_kind(), Some(c))
        } else {
            return Err(IoError::UnknownMarkerDescription { index: m.index, description: m.description.clone() });
        };
        let sample_index = m
            .position_sample
            .checked_sub(1)
            .filter(|&p| p < n_samples)
            .ok_or(IoError::MarkerOutOfRange { index: m.index, position: m.position_sample, n_samples })?;
        events.push(MarkerEvent { sample_index, kind, class_label });
    }

    Ok(ContinuousRecording {
        montage: sub,
        sample_rate_hz: header.sample_rate_hz(),
        data,
        markers: events,
        session_kind,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Encoding {
    Float32,
    /// `None` picks the finest entry of [`INT16_RESOLUTIONS_UV`] that fits.
    Int16 {
        resolution_uv: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriteOptions {
    /// File stem shared by the three files.
    pub base_name: String,
    pub encoding: Encoding,
    pub orientation: Orientation,
    pub marker_map: MarkerMap,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            base_name: "recording".into(),
            encoding: Encoding::Float32,
            orientation: Orientation::Multiplexed,
            marker_map: MarkerMap::default(),
        }
    }
}

/// Header and marker text plus the binary payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrainVisionText {
    pub header: String,
    pub markers: String,
    pub binary: Vec<u8>,
}

fn fits_i16(x: f32, res: f64) -> bool {
    let q = (f64::from(x) / res).round();
    (-32768.0..=32767.0).contains(&q)
}

fn pick_resolution(data: &Array2<f32>, requested: Option<f64>) -> Result<f64, IoError> {
    let max_abs = data.iter().fold(0.0f64, |m, &v| if v.is_nan() { f64::NAN } else { m.max(f64::from(v).abs()) });
    let ok = |res: f64| data.iter().all(|&v| fits_i16(v, res));
    match requested {
        Some(res) if res > 0.0 && res.is_finite() => {
            if ok(res) {
                Ok(res)
            } else {
                Err(IoError::DynamicRangeOverflow { max_abs_uv: max_abs, resolution_uv: res })
            }
        }
        Some(res) => Err(IoError::InvalidValue { key: "resolution".into(), value: res.to_string() }),
        None => INT16_RESOLUTIONS_UV.iter().copied().find(|&r| ok(r)).ok_or(IoError::DynamicRangeOverflow {
            max_abs_uv: max_abs,
            resolution_uv: INT16_RESOLUTIONS_UV[INT16_RESOLUTIONS_UV.len() - 1],
        }),
    }
}

/// Serializes a recording. Output text uses LF line ends.
pub fn write_recording(rec: &ContinuousRecording, opts: &WriteOptions) -> Result<BrainVisionText, IoError> {
    let n_ch = rec.n_channels();
    let n_s = rec.n_samples();
    let (format, resolution) = match opts.encoding {
        Encoding::Float32 => (BinaryFormat::Float32, 1.0),
        Encoding::Int16 { resolution_uv } => (BinaryFormat::Int16, pick_resolution(&rec.data, resolution_uv)?),
    };

    let bps = format.bytes_per_sample();
    let mut binary = vec![0u8; n_ch * n_s * bps];
    for (c, row) in rec.data.outer_iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            let k = match opts.orientation {
                Orientation::Multiplexed => s * n_ch + c,
                Orientation::Vectorized => c * n_s + s,
            } * bps;
            match format {
                BinaryFormat::Float32 => binary[k..k + 4].copy_from_slice(&v.to_le_bytes()),
                BinaryFormat::Int16 => {
                    let q = (f64::from(v) / resolution).round() as i16;
                    binary[k..k + 2].copy_from_slice(&q.to_le_bytes());
                }
            }
        }
    }

    let base = &opts.base_name;
    let mut h = String::new();
    h.push_str("Brain Vision Data Exchange Header File Version 1.0\n");
    h.push_str("; Data written by vmi\n\n");
    h.push_str("[Common Infos]\nCodepage=Latin-1\n");
    let _ = writeln!(h, "DataFile={base}.eeg\nMarkerFile={base}.vmrk");
    h.push_str("DataFormat=BINARY\n");
    let _ = writeln!(h, "DataOrientation={}", opts.orientation.keyword());
    let _ = writeln!(h, "NumberOfChannels={n_ch}");
    let _ = writeln!(h, "SamplingInterval={}", 1e6 / rec.sample_rate_hz);
    let _ = writeln!(h, "\n[Binary Infos]\nBinaryFormat={}", format.keyword());
    h.push_str("\n[Channel Infos]\n");
    h.push_str("; Ch<Channel number>=<Name>,<Reference channel name>,<Resolution in \"Unit\">,<Unit>\n");
    for (i, ch) in rec.montage.channels().iter().enumerate() {
        let _ = writeln!(h, "Ch{}={},,{},{}", i + 1, escape_field(&ch.label), resolution, MICROVOLT);
    }
    h.push_str("\n[Session Infos]\n");
    let _ = writeln!(h, "SessionKind={}", rec.session_kind);
    let _ = writeln!(h, "SamplingRateHz={}", rec.sample_rate_hz);

    let mut m = String::new();
    m.push_str("Brain Vision Data Exchange Marker File, Version 1.0\n\n");
    m.push_str("[Common Infos]\nCodepage=Latin-1\n");
    let _ = writeln!(m, "DataFile={base}.eeg\n");
    m.push_str("[Marker Infos]\n");
    m.push_str(
        "; Mk<Marker number>=<Type>,<Description>,<Position in data points>,<Size in data points>,<Channel number>\n",
    );
    m.push_str("Mk1=New Segment,,1,1,0\n");
    for (i, ev) in rec.markers.iter().enumerate() {
        let code = match (ev.kind, ev.class_label) {
            (MarkerKind::RestOnset, _) => opts.marker_map.rest.as_str(),
            (_, Some(c)) => opts
                .marker_map
                .code_of(c)
                .ok_or_else(|| IoError::InvalidValue { key: "marker map".into(), value: c.to_string() })?,
            (_, None) => {
                return Err(IoError::InvalidValue { key: format!("marker {i}"), value: "onset without class".into() })
            }
        };
        let _ = writeln!(m, "Mk{}=Stimulus,{},{},1,0", i + 2, escape_field(code), ev.sample_index + 1);
    }

    Ok(BrainVisionText { header: h, markers: m, binary })
}

fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Reads a recording from its `.vhdr` path; the data and marker files are
/// resolved relative to the header's directory.
pub fn read_brainvision(vhdr: &Path, montage: &Montage, map: &MarkerMap) -> Result<ContinuousRecording, IoError> {
    let header = parse_header_bytes(&read_file(vhdr)?)?;
    let dir = vhdr.parent().unwrap_or(Path::new("."));
    let sibling = |name: &Option<String>, ext: &str| match name {
        Some(n) => dir.join(n),
        None => vhdr.with_extension(ext),
    };
    let vmrk = sibling(&header.marker_file, "vmrk");
    let eeg = sibling(&header.data_file, "eeg");
    let markers = parse_markers_bytes(&read_file(&vmrk)?)?;
    let binary = read_file(&eeg)?;
    read_recording(&header, &markers, &binary, montage, map)
}

/// Writes `<base>.vhdr`, `<base>.vmrk` and `<base>.eeg` into `dir` and returns
/// the three paths in that order.
pub fn write_brainvision(rec: &ContinuousRecording, dir: &Path, opts: &WriteOptions) -> Result<[PathBuf; 3], IoError> {
    let t = write_recording(rec, opts)?;
    let paths = ["vhdr", "vmrk", "eeg"].map(|ext| dir.join(format!("{}.{ext}", opts.base_name)));
    let contents = [encode_latin1(&t.header)?, encode_latin1(&t.markers)?, t.binary];
    for (p, bytes) in paths.iter().zip(contents) {
        std::fs::write(p, bytes).map_err(|source| IoError::File { path: p.clone(), source })?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_header, parse_markers};
    use crate::montage::default_montage;
    use crate::types::{validate_recording, ClassLabel};
    use proptest::prelude::*;

    fn header_2ch(format: &str, orientation: &str, res: f64) -> HeaderSpec {
        parse_header(&format!(
            "[Common Infos]\nDataFormat=BINARY\nDataOrientation={orientation}\nNumberOfChannels=2\nSamplingInterval=1000\n\
             [Binary Infos]\nBinaryFormat={format}\n[Channel Infos]\nCh1=Oz,,{res}\nCh2=Pz,,{res}\n"
        ))
        .unwrap()
    }

    #[test]
    fn int16_multiplexed_scaling() {
        let h = header_2ch("INT_16", "MULTIPLEXED", 0.5);
        let bytes: Vec<u8> = [100i16, -100, 200, -200].iter().flat_map(|v| v.to_le_bytes()).collect();
        let rec = read_recording(&h, &[], &bytes, &default_montage(), &MarkerMap::default()).unwrap();
        assert_eq!(rec.data, ndarray::array![[50.0f32, 100.0], [-50.0, -100.0]]);
        assert_eq!(rec.sample_rate_hz, 1000.0);
        assert_eq!(rec.montage.labels().collect::<Vec<_>>(), ["Oz", "Pz"]);
        assert_eq!(rec.montage.channels()[0].position, [0.0, -1.0]);
    }

    #[test]
    fn float32_vectorized_verbatim() {
        let h = header_2ch("IEEE_FLOAT_32", "VECTORIZED", 1.0);
        let bytes: Vec<u8> = [50.0f32, 100.0, -50.0, -100.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let rec = read_recording(&h, &[], &bytes, &default_montage(), &MarkerMap::default()).unwrap();
        assert_eq!(rec.data, ndarray::array![[50.0f32, 100.0], [-50.0, -100.0]]);
    }

    #[test]
    fn length_mismatch() {
        let h = header_2ch("INT_16", "MULTIPLEXED", 0.5);
        let r = read_recording(&h, &[], &[0u8; 7], &default_montage(), &MarkerMap::default());
        assert!(matches!(r, Err(IoError::LengthMismatch { bytes: 7, frame: 4 })));
    }

    fn raw(index: usize, desc: &str, pos: usize) -> RawMarker {
        RawMarker {
            index,
            type_str: "Stimulus".into(),
            description: desc.into(),
            position_sample: pos,
            length_samples: 1,
            channel: 0,
        }
    }

    #[test]
    fn marker_mapping() {
        let h = header_2ch("INT_16", "MULTIPLEXED", 0.5);
        let bytes = vec![0u8; 4 * 100];
        let map = MarkerMap::default();
        let mut comment = raw(1, "anything", 1);
        comment.type_str = "Comment".into();
        let ms = [comment, raw(2, "S 10", 1), raw(3, "S  4", 11)];
        let rec = read_recording(&h, &ms, &bytes, &default_montage(), &map).unwrap();
        assert_eq!(
            rec.markers,
            vec![
                MarkerEvent { sample_index: 0, kind: MarkerKind::RestOnset, class_label: None },
                MarkerEvent {
                    sample_index: 10,
                    kind: MarkerKind::CueOnset,
                    class_label: Some(ClassLabel::PouringWater)
                },
            ]
        );
        let bad = read_recording(&h, &[raw(5, "S  9", 3)], &bytes, &default_montage(), &map);
        assert!(matches!(bad, Err(IoError::UnknownMarkerDescription { index: 5, .. })));
        let late = read_recording(&h, &[raw(2, "S  1", 101)], &bytes, &default_montage(), &map);
        assert!(matches!(late, Err(IoError::MarkerOutOfRange { index: 2, position: 101, n_samples: 100 })));
    }

    #[test]
    fn unknown_channel() {
        let mut h = header_2ch("INT_16", "MULTIPLEXED", 0.5);
        h.channel_entries[1].label = "XX".into();
        let r = read_recording(&h, &[], &[], &default_montage(), &MarkerMap::default());
        assert!(matches!(r, Err(IoError::ChannelNotInMontage(l)) if l == "XX"));
    }

    fn small_recording(data: Array2<f32>, markers: Vec<MarkerEvent>, kind: SessionKind) -> ContinuousRecording {
        let labels: Vec<&str> = ["Oz", "O1", "O2", "Pz", "Cz"][..data.nrows()].to_vec();
        ContinuousRecording {
            montage: default_montage().subset(&labels).unwrap(),
            sample_rate_hz: 1000.0,
            data,
            markers,
            session_kind: kind,
        }
    }

    fn roundtrip(rec: &ContinuousRecording, opts: &WriteOptions) -> ContinuousRecording {
        let t = write_recording(rec, opts).unwrap();
        let h = parse_header(&t.header).unwrap();
        let m = parse_markers(&t.markers).unwrap();
        read_recording(&h, &m, &t.binary, &default_montage(), &opts.marker_map).unwrap()
    }

    #[test]
    fn marker_positions_are_one_based_on_disk() {
        let markers = vec![
            MarkerEvent { sample_index: 0, kind: MarkerKind::RestOnset, class_label: None },
            MarkerEvent {
                sample_index: 7,
                kind: MarkerKind::StimulusOnset,
                class_label: Some(ClassLabel::OpeningDoor),
            },
        ];
        let rec = small_recording(Array2::zeros((2, 10)), markers, SessionKind::Perception);
        let t = write_recording(&rec, &WriteOptions::default()).unwrap();
        assert!(t.markers.contains("Mk3=Stimulus,S  2,8,1,0\n"));
        assert!(!t.header.contains('\r'));
        assert_eq!(roundtrip(&rec, &WriteOptions::default()), rec);
    }

    #[test]
    fn int16_quantization_bound() {
        let n = 2000;
        let data = Array2::from_shape_fn((2, n), |(c, s)| {
            let t = s as f64 / (n - 1) as f64;
            let v = -3276.8 + t * (3276.7 + 3276.8);
            (if c == 0 { v } else { (-v).min(3276.7) }) as f32
        });
        let rec = small_recording(data, vec![], SessionKind::Imagery);
        let opts = WriteOptions { encoding: Encoding::Int16 { resolution_uv: Some(0.1) }, ..Default::default() };
        let back = roundtrip(&rec, &opts);
        // half a quantization step, plus the f32 spacing at 3276.8
        let bound = 0.05 + 3276.8 * f64::from(f32::EPSILON);
        let worst = rec.data.iter().zip(back.data.iter()).map(|(a, b)| f64::from((a - b).abs())).fold(0.0, f64::max);
        assert!(worst <= bound, "worst {worst}");
    }

    #[test]
    fn int16_overflow_and_auto_resolution() {
        let mut data = Array2::zeros((2, 4));
        data[[1, 2]] = 1e9f32;
        let rec = small_recording(data, vec![], SessionKind::Imagery);
        let opts = WriteOptions { encoding: Encoding::Int16 { resolution_uv: None }, ..Default::default() };
        assert!(matches!(write_recording(&rec, &opts), Err(IoError::DynamicRangeOverflow { .. })));

        let mut data = Array2::zeros((2, 4));
        data[[0, 1]] = 4000.0f32;
        let rec = small_recording(data, vec![], SessionKind::Imagery);
        let t = write_recording(&rec, &opts).unwrap();
        assert!(t.header.contains("Ch1=Oz,,0.5,"));
    }

    #[test]
    fn files_roundtrip_and_missing_marker_file() {
        let dir = std::env::temp_dir().join(format!("vmi-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rec = small_recording(Array2::from_elem((3, 50), 1.25f32), vec![], SessionKind::Imagery);
        let opts = WriteOptions { base_name: "s".into(), ..Default::default() };
        let [vhdr, vmrk, _] = write_brainvision(&rec, &dir, &opts).unwrap();
        let back = read_brainvision(&vhdr, &default_montage(), &MarkerMap::default()).unwrap();
        assert_eq!(back, rec);
        std::fs::remove_file(&vmrk).unwrap();
        let err = read_brainvision(&vhdr, &default_montage(), &MarkerMap::default()).unwrap_err();
        assert!(err.to_string().contains("s.vmrk"), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    fn arb_recording() -> impl Strategy<Value = ContinuousRecording> {
        (1usize..=5, 1usize..60, any::<bool>(), prop::sample::select(vec![250.0, 256.0, 300.0, 512.0, 1000.0, 333.0]))
            .prop_flat_map(|(n_ch, n_s, imagery, fs)| {
                (
                    prop::collection::vec(-1e6f32..1e6f32, n_ch * n_s),
                    prop::collection::btree_set(0..n_s, 0..n_s.min(8)),
                    prop::collection::vec(0usize..5, 8),
                    Just((n_ch, n_s, imagery, fs)),
                )
            })
            .prop_map(|(values, positions, kinds, (n_ch, n_s, imagery, fs))| {
                let session = if imagery { SessionKind::Imagery } else { SessionKind::Perception };
                let markers = positions
                    .into_iter()
                    .zip(kinds)
                    .map(|(p, k)| match ClassLabel::from_index(k) {
                        Some(c) => MarkerEvent { sample_index: p, kind: session.onset_kind(), class_label: Some(c) },
                        None => MarkerEvent { sample_index: p, kind: MarkerKind::RestOnset, class_label: None },
                    })
                    .collect();
                let mut rec = small_recording(Array2::from_shape_vec((n_ch, n_s), values).unwrap(), markers, session);
                rec.sample_rate_hz = fs;
                rec
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn float32_roundtrip_is_exact(rec in arb_recording(), vectorized in any::<bool>()) {
            prop_assert!(validate_recording(&rec).is_empty());
            let orientation = if vectorized { Orientation::Vectorized } else { Orientation::Multiplexed };
            let opts = WriteOptions { orientation, ..Default::default() };
            prop_assert_eq!(roundtrip(&rec, &opts), rec);
        }

        #[test]
        fn int16_roundtrip_within_quantization(rec in arb_recording()) {
            let opts = WriteOptions { encoding: Encoding::Int16 { resolution_uv: None }, ..Default::default() };
            let t = write_recording(&rec, &opts);
            let max_abs = rec.data.iter().fold(0.0f32, |m, v| m.max(v.abs()));
            if max_abs as f64 / 152.6 > 32767.0 {
                prop_assert!(t.is_err());
            } else {
                let back = roundtrip(&rec, &opts);
                let res = parse_header(&t.unwrap().header).unwrap().channel_entries[0].resolution_uv;
                for (a, b) in rec.data.iter().zip(back.data.iter()) {
                    let bound = res / 2.0 + f64::from(a.abs()) * f64::from(f32::EPSILON);
                    prop_assert!(f64::from((a - b).abs()) <= bound);
                }
                prop_assert_eq!(back.markers, rec.markers);
            }
        }
    }
}
