//! Synthetic sessions from a linear forward model with planted,
//! class-specific occipito-parietal alpha sources.
//!
//! Each trial is `rest_s` of rest followed by `task_s` of task, the first
//! `cue_s` of which carries a class-independent evoked transient. During the
//! task the active class source and a shared occipital background rhythm are
//! amplitude-modulated by the session envelope. Noise is spatially mixed pink
//! noise plus white sensor noise.

mod bayes;
mod noise;

pub use bayes::{bayes_reference_accuracy, bayes_reference_accuracy_with};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::montage::{default_montage, Montage};
use crate::types::{ClassLabel, ContinuousRecording, MarkerEvent, MarkerKind, SessionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnrPreset {
    Null,
    Low,
    High,
}

impl SnrPreset {
    /// Class source amplitude in µV (unit-norm pattern).
    pub fn class_amplitude_uv(self) -> f64 {
        match self {
            SnrPreset::Null => 0.0,
            SnrPreset::Low => 1.0,
            SnrPreset::High => 5.0,
        }
    }
}

impl fmt::Display for SnrPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrPreset::Null => "null",
            SnrPreset::Low => "low",
            SnrPreset::High => "high",
        })
    }
}

impl FromStr for SnrPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "null" => Ok(SnrPreset::Null),
            "low" => Ok(SnrPreset::Low),
            "high" => Ok(SnrPreset::High),
            _ => Err(format!("unknown SNR preset `{s}` (expected null, low or high)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("n_trials_per_class must be at least 1")]
    NoTrials,
    #[error("envelope gain must exceed 1, got {0}")]
    GainTooSmall(f64),
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("{0} must be non-negative and finite")]
    Negative(&'static str),
    #[error("pink_shared_fraction {0} outside [0, 1]")]
    SharedFraction(f64),
    #[error("cue ({cue_s} s) longer than task ({task_s} s)")]
    CueLongerThanTask { cue_s: f64, task_s: f64 },
    #[error("alpha frequency {alpha_hz} +/- {jitter_hz} Hz outside (0, fs/2)")]
    AlphaOutOfRange { alpha_hz: f64, jitter_hz: f64 },
    #[error("pattern for {class} has {found} entries, montage has {expected}")]
    PatternLength { class: ClassLabel, found: usize, expected: usize },
    #[error("pattern for {class} has norm {norm}, expected 1")]
    PatternNorm { class: ClassLabel, norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub session_kind: SessionKind,
    pub n_trials_per_class: usize,
    pub fs_hz: f64,
    pub rest_s: f64,
    pub cue_s: f64,
    pub task_s: f64,
    pub preset: SnrPreset,
    /// Overrides the preset amplitude per class, in class order.
    pub class_amplitudes_uv: Option<[f64; 4]>,
    /// Unit-norm spatial patterns over the default montage, in class order.
    pub source_patterns: Option<[Vec<f64>; 4]>,
    /// Envelope gain `g`.
    pub gain: f64,
    pub alpha_hz: f64,
    pub alpha_jitter_hz: f64,
    /// Peak amplitude of the shared occipital rhythm at Oz.
    pub background_alpha_uv: f64,
    /// N1 peak of the evoked cue response at Cz.
    pub evoked_uv: f64,
    /// Per-channel RMS of the pink noise.
    pub pink_uv: f64,
    /// Fraction of pink variance shared across channels through the mixing
    /// matrix; the rest is independent per channel.
    pub pink_shared_fraction: f64,
    pub white_uv: f64,
    pub n_pink_sources: usize,
    pub seed: u64,
    pub mixing_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            session_kind: SessionKind::Imagery,
            n_trials_per_class: 50,
            fs_hz: 1000.0,
            rest_s: 3.0,
            cue_s: 0.5,
            task_s: 5.0,
            preset: SnrPreset::High,
            class_amplitudes_uv: None,
            source_patterns: None,
            gain: 2.0,
            alpha_hz: 10.0,
            alpha_jitter_hz: 1.0,
            background_alpha_uv: 5.0,
            evoked_uv: 6.0,
            pink_uv: 10.0,
            pink_shared_fraction: 0.5,
            white_uv: 2.0,
            n_pink_sources: 16,
            seed: 0,
            mixing_seed: 0x5eed,
        }
    }
}

/// Dipole end points of the default class patterns, in class order.
const DIPOLES: [(&str, &str); 4] = [("PO7", "P3"), ("PO8", "P4"), ("O1", "P2"), ("O2", "P1")];
const DIPOLE_WIDTH: f64 = 0.15;
const BACKGROUND_WIDTH: f64 = 0.3;
const EVOKED_WIDTH: f64 = 0.3;

impl SynthConfig {
    pub fn preset(preset: SnrPreset, session_kind: SessionKind, seed: u64) -> Self {
        Self { preset, session_kind, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_trials_per_class == 0 {
            return Err(SynthError::NoTrials);
        }
        if !(self.gain > 1.0) || !self.gain.is_finite() {
            return Err(SynthError::GainTooSmall(self.gain));
        }
        for (name, v) in
            [("fs_hz", self.fs_hz), ("rest_s", self.rest_s), ("task_s", self.task_s), ("alpha_hz", self.alpha_hz)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SynthError::NonPositive(name));
            }
        }
        if self.n_pink_sources == 0 {
            return Err(SynthError::NonPositive("n_pink_sources"));
        }
        let mut nonneg = vec![
            ("cue_s", self.cue_s),
            ("alpha_jitter_hz", self.alpha_jitter_hz),
            ("background_alpha_uv", self.background_alpha_uv),
            ("evoked_uv", self.evoked_uv),
            ("pink_uv", self.pink_uv),
            ("white_uv", self.white_uv),
        ];
        if let Some(a) = self.class_amplitudes_uv {
            nonneg.extend(a.iter().map(|&v| ("class_amplitudes_uv", v)));
        }
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SynthError::Negative(name));
            }
        }
        if !(0.0..=1.0).contains(&self.pink_shared_fraction) {
            return Err(SynthError::SharedFraction(self.pink_shared_fraction));
        }
        if self.cue_s > self.task_s {
            return Err(SynthError::CueLongerThanTask { cue_s: self.cue_s, task_s: self.task_s });
        }
        let (lo, hi) = (self.alpha_hz - self.alpha_jitter_hz, self.alpha_hz + self.alpha_jitter_hz);
        if !(lo > 0.0 && hi < self.fs_hz / 2.0) {
            return Err(SynthError::AlphaOutOfRange { alpha_hz: self.alpha_hz, jitter_hz: self.alpha_jitter_hz });
        }
        if let Some(ps) = &self.source_patterns {
            let n = default_montage().len();
            for (p, class) in ps.iter().zip(ClassLabel::ALL) {
                if p.len() != n {
                    return Err(SynthError::PatternLength { class, found: p.len(), expected: n });
                }
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(SynthError::PatternNorm { class, norm });
                }
            }
        }
        Ok(())
    }

    pub fn class_amplitudes(&self) -> [f64; 4] {
        self.class_amplitudes_uv.unwrap_or([self.preset.class_amplitude_uv(); 4])
    }

    pub fn rest_samples(&self) -> usize {
        (self.rest_s * self.fs_hz).round() as usize
    }

    pub fn trial_samples(&self) -> usize {
        self.rest_samples() + (self.task_s * self.fs_hz).round() as usize
    }

    /// Envelope multiplier `t` seconds after task onset.
    pub fn envelope(&self, t: f64) -> f64 {
        match self.session_kind {
            SessionKind::Imagery => 1.0 + (self.gain - 1.0) * (t / self.task_s).clamp(0.0, 1.0),
            SessionKind::Perception => {
                let floor = 1.0 / self.gain;
                if self.cue_s <= 0.0 || t >= self.cue_s {
                    floor
                } else {
                    1.0 + (floor - 1.0) * (t / self.cue_s).max(0.0)
                }
            }
        }
    }

    /// Class order of the session: `n_trials_per_class` of each class,
    /// shuffled with the session seed.
    pub fn class_order(&self) -> Vec<ClassLabel> {
        let mut order: Vec<ClassLabel> =
            ClassLabel::ALL.iter().flat_map(|&c| std::iter::repeat(c).take(self.n_trials_per_class)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        order.shuffle(&mut rng);
        order
    }
}

fn blob(montage: &Montage, centre: [f64; 2], width: f64) -> Array1<f64> {
    montage
        .channels()
        .iter()
        .map(|c| {
            let d2 = (c.position[0] - centre[0]).powi(2) + (c.position[1] - centre[1]).powi(2);
            (-d2 / (2.0 * width * width)).exp()
        })
        .collect()
}

fn position(montage: &Montage, label: &str) -> [f64; 2] {
    let i = montage.index_of(label).expect("label of the default montage");
    montage.channels()[i].position
}

/// Default unit-norm dipolar patterns: a positive pole over occipital or
/// parieto-occipital cortex and a negative one over parietal cortex.
pub fn default_class_patterns(montage: &Montage) -> [Array1<f64>; 4] {
    DIPOLES.map(|(pos, neg)| {
        let p =
            blob(montage, position(montage, pos), DIPOLE_WIDTH) - blob(montage, position(montage, neg), DIPOLE_WIDTH);
        let n = p.dot(&p).sqrt();
        p / n
    })
}

/// Everything about a session that does not change from trial to trial.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    cfg: SynthConfig,
    pub montage: Montage,
    /// Class source patterns, unit norm.
    pub patterns: [Array1<f64>; 4],
    pub amplitudes: [f64; 4],
    /// Background rhythm pattern, 1 at Oz.
    pub background: Array1<f64>,
    pub evoked: Array1<f64>,
    /// `[n_channels, n_pink_sources]`, rows of norm
    /// `pink_uv * sqrt(pink_shared_fraction)`.
    pub mixing: Array2<f64>,
    pink_scale: f64,
}

impl ForwardModel {
    pub fn new(cfg: &SynthConfig) -> Result<Self, SynthError> {
        cfg.validate()?;
        let montage = default_montage();
        let patterns = match &cfg.source_patterns {
            Some(ps) => ps.clone().map(Array1::from),
            None => default_class_patterns(&montage),
        };
        let background = blob(&montage, position(&montage, "Oz"), BACKGROUND_WIDTH);
        let evoked = blob(&montage, position(&montage, "Cz"), EVOKED_WIDTH);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.mixing_seed);
        let n_ch = montage.len();
        let mut mixing = Array2::from_shape_fn((n_ch, cfg.n_pink_sources), |_| rng.sample::<f64, _>(StandardNormal));
        for mut row in mixing.rows_mut() {
            let norm = row.dot(&row).sqrt();
            row *= cfg.pink_uv * cfg.pink_shared_fraction.sqrt() / norm;
        }
        Ok(Self {
            cfg: cfg.clone(),
            montage,
            patterns,
            amplitudes: cfg.class_amplitudes(),
            background,
            evoked,
            mixing,
            pink_scale: noise::kellet_std(),
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    /// One trial `[n_channels, trial_samples]`, rest then task. `class`
    /// selects the active source; `None` leaves only shared activity.
    /// Randomness comes from stream `stream` of the session seed.
    pub fn trial(&self, class: Option<ClassLabel>, stream: u64) -> Array2<f64> {
        let cfg = &self.cfg;
        let fs = cfg.fs_hz;
        let n = cfg.trial_samples();
        let rest = cfg.rest_samples();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);

        let jitter = |rng: &mut ChaCha8Rng| cfg.alpha_hz + cfg.alpha_jitter_hz * (2.0 * rng.gen::<f64>() - 1.0);
        let f_bg = jitter(&mut rng);
        let ph_bg = 2.0 * PI * rng.gen::<f64>();
        let f_c = jitter(&mut rng);
        let ph_c = 2.0 * PI * rng.gen::<f64>();

        let mut latent = Array2::<f64>::zeros((cfg.n_pink_sources, n));
        for mut row in latent.rows_mut() {
            let p = noise::pink(&mut rng, n, self.pink_scale);
            row.iter_mut().zip(p).for_each(|(d, v)| *d = v);
        }
        let mut x = self.mixing.dot(&latent);
        let own = cfg.pink_uv * (1.0 - cfg.pink_shared_fraction).sqrt();
        if own > 0.0 {
            for mut row in x.rows_mut() {
                let p = noise::pink(&mut rng, n, self.pink_scale);
                row.iter_mut().zip(p).for_each(|(d, v)| *d += own * v);
            }
        }
        if cfg.white_uv > 0.0 {
            x.mapv_inplace(|v| v + cfg.white_uv * rng.sample::<f64, _>(StandardNormal));
        }

        let env: Vec<f64> = (0..n).map(|i| if i < rest { 1.0 } else { cfg.envelope((i - rest) as f64 / fs) }).collect();
        let bg: Vec<f64> = (0..n)
            .map(|i| cfg.background_alpha_uv * env[i] * (2.0 * PI * f_bg * i as f64 / fs + ph_bg).sin())
            .collect();
        add_outer(&mut x, &self.background, &bg, 0);

        let evoked: Vec<f64> = (rest..n).map(|i| cfg.evoked_uv * evoked_waveform((i - rest) as f64 / fs)).collect();
        add_outer(&mut x, &self.evoked, &evoked, rest);

        if let Some(c) = class {
            let a = self.amplitudes[c.index()];
            if a > 0.0 {
                let src: Vec<f64> =
                    (rest..n).map(|i| a * env[i] * (2.0 * PI * f_c * (i - rest) as f64 / fs + ph_c).sin()).collect();
                add_outer(&mut x, &self.patterns[c.index()], &src, rest);
            }
        }
        x
    }
}

fn add_outer(x: &mut Array2<f64>, pattern: &Array1<f64>, series: &[f64], offset: usize) {
    for (mut row, &w) in x.rows_mut().into_iter().zip(pattern) {
        if w == 0.0 {
            continue;
        }
        for (d, v) in row.slice_mut(s![offset..offset + series.len()]).iter_mut().zip(series) {
            *d += w * v;
        }
    }
}

/// N1 at 100 ms and P2 at 200 ms, normalised so the N1 peak is -1.
pub fn evoked_waveform(t: f64) -> f64 {
    let g = |mu: f64, sd: f64| (-(t - mu).powi(2) / (2.0 * sd * sd)).exp();
    -g(0.1, 0.02) + 0.8 * g(0.2, 0.035)
}

/// Generates a full session. Trials are drawn independently (stream
/// `trial + 1`), so any trial can be regenerated on its own.
pub fn generate_session(cfg: &SynthConfig) -> Result<ContinuousRecording, SynthError> {
    let model = ForwardModel::new(cfg)?;
    let order = cfg.class_order();
    let len = cfg.trial_samples();
    let rest = cfg.rest_samples();
    let n_ch = model.montage.len();
    let mut data = Array2::<f32>::zeros((n_ch, order.len() * len));
    let mut markers = Vec::with_capacity(2 * order.len());
    let onset = cfg.session_kind.onset_kind();
    for (t, &class) in order.iter().enumerate() {
        let x = model.trial(Some(class), t as u64 + 1);
        let start = t * len;
        data.slice_mut(s![.., start..start + len]).zip_mut_with(&x, |d, &v| *d = v as f32);
        markers.push(MarkerEvent { sample_index: start, kind: MarkerKind::RestOnset, class_label: None });
        markers.push(MarkerEvent { sample_index: start + rest, kind: onset, class_label: Some(class) });
    }
    Ok(ContinuousRecording {
        montage: model.montage,
        sample_rate_hz: cfg.fs_hz,
        data,
        markers,
        session_kind: cfg.session_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{band_power, extract_epochs};
    use crate::types::validate_recording;

    fn small(kind: SessionKind, preset: SnrPreset, n: usize, seed: u64) -> SynthConfig {
        SynthConfig { n_trials_per_class: n, ..SynthConfig::preset(preset, kind, seed) }
    }

    #[test]
    fn patterns_are_unit_norm_and_distinct() {
        let ps = default_class_patterns(&default_montage());
        for (i, p) in ps.iter().enumerate() {
            assert!((p.dot(p) - 1.0).abs() < 1e-12);
            for q in &ps[i + 1..] {
                assert!(p.dot(q).abs() < 0.5, "overlap {}", p.dot(q));
            }
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let ok = SynthConfig::default();
        assert!(ok.validate().is_ok());
        assert_eq!(SynthConfig { n_trials_per_class: 0, ..ok.clone() }.validate(), Err(SynthError::NoTrials));
        assert_eq!(SynthConfig { gain: 1.0, ..ok.clone() }.validate(), Err(SynthError::GainTooSmall(1.0)));
        assert!(matches!(
            SynthConfig { cue_s: 6.0, ..ok.clone() }.validate(),
            Err(SynthError::CueLongerThanTask { .. })
        ));
        let mut bad = [vec![0.0; 64], vec![0.0; 64], vec![0.0; 64], vec![0.0; 64]];
        for p in bad.iter_mut() {
            p[0] = 1.0;
        }
        bad[2][0] = 2.0;
        assert!(matches!(
            SynthConfig { source_patterns: Some(bad), ..ok.clone() }.validate(),
            Err(SynthError::PatternNorm { class: ClassLabel::PickingUpPhone, .. })
        ));
        assert!(matches!(
            SynthConfig { source_patterns: Some([vec![1.0], vec![1.0], vec![1.0], vec![1.0]]), ..ok }.validate(),
            Err(SynthError::PatternLength { found: 1, .. })
        ));
    }

    #[test]
    fn envelopes() {
        let im = SynthConfig::default();
        assert_eq!(im.envelope(0.0), 1.0);
        assert!((im.envelope(2.5) - 1.5).abs() < 1e-12);
        assert_eq!(im.envelope(5.0), 2.0);
        let pe = SynthConfig { session_kind: SessionKind::Perception, ..im };
        assert_eq!(pe.envelope(0.0), 1.0);
        assert!((pe.envelope(0.25) - 0.75).abs() < 1e-12);
        assert_eq!(pe.envelope(0.5), 0.5);
        assert_eq!(pe.envelope(4.0), 0.5);
    }

    #[test]
    fn session_structure() {
        let cfg = small(SessionKind::Perception, SnrPreset::Low, 3, 1);
        let rec = generate_session(&cfg).unwrap();
        assert!(validate_recording(&rec).is_empty(), "{:?}", validate_recording(&rec));
        assert_eq!(rec.n_channels(), 64);
        assert_eq!(rec.n_samples(), 12 * 8000);
        assert_eq!(rec.markers.len(), 4 * 3 * 2);
        assert_eq!(rec.markers.iter().filter(|m| m.kind == MarkerKind::StimulusOnset).count(), 12);
        let es = extract_epochs(&rec, (0.5, 4.0), MarkerKind::StimulusOnset).unwrap();
        assert_eq!(es.class_counts(), [3; 4]);
        assert_eq!(rec.markers[1].sample_index, 3000);
    }

    #[test]
    fn seeded_determinism() {
        let cfg = small(SessionKind::Imagery, SnrPreset::High, 2, 9);
        let a = generate_session(&cfg).unwrap();
        let b = generate_session(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_session(&SynthConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn class_order_is_balanced_and_shuffled() {
        let cfg = SynthConfig::default();
        let order = cfg.class_order();
        assert_eq!(order.len(), 200);
        for c in ClassLabel::ALL {
            assert_eq!(order.iter().filter(|&&o| o == c).count(), 50);
        }
        assert_ne!(order[..50], [ClassLabel::EatingFood; 50]);
    }

    #[test]
    fn noise_level_per_channel() {
        let cfg = SynthConfig {
            background_alpha_uv: 0.0,
            evoked_uv: 0.0,
            ..small(SessionKind::Imagery, SnrPreset::Null, 5, 2)
        };
        let rec = generate_session(&cfg).unwrap();
        let expect = (cfg.pink_uv.powi(2) + cfg.white_uv.powi(2)).sqrt();
        for row in rec.data.rows() {
            let rms = (row.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>() / row.len() as f64).sqrt();
            assert!((rms / expect - 1.0).abs() < 0.35, "rms {rms}");
        }
    }

    #[test]
    fn occipital_alpha_grows_during_imagery() {
        let cfg = small(SessionKind::Imagery, SnrPreset::High, 10, 4);
        let rec = generate_session(&cfg).unwrap();
        let oz = rec.channel_index("Oz").unwrap();
        let early =
            band_power(&extract_epochs(&rec, (0.0, 1.0), MarkerKind::CueOnset).unwrap(), (8.0, 13.0), 3).unwrap();
        let late =
            band_power(&extract_epochs(&rec, (3.0, 4.0), MarkerKind::CueOnset).unwrap(), (8.0, 13.0), 3).unwrap();
        let wins = (0..40).filter(|&t| late[[t, oz]] > early[[t, oz]]).count();
        assert!(wins as f64 >= 0.95 * 40.0, "{wins}/40");
    }

    #[test]
    fn oz_spectrum_peaks_in_alpha_band() {
        let cfg = small(SessionKind::Imagery, SnrPreset::High, 2, 6);
        let rec = generate_session(&cfg).unwrap();
        let oz = rec.channel_index("Oz").unwrap();
        let es = extract_epochs(&rec, (0.0, 5.0), MarkerKind::CueOnset).unwrap();
        // averaged periodogram at 0.2 Hz resolution over the ERSP range,
        // where the 1/f floor no longer dominates
        let n = es.n_samples();
        let freqs: Vec<f64> = (15..=250).map(|k| k as f64 * 0.2).collect();
        let mut power = vec![0.0; freqs.len()];
        for t in 0..es.n_trials() {
            let x = es.trial(t).row(oz).to_vec();
            for (p, &f) in power.iter_mut().zip(&freqs) {
                let w = 2.0 * PI * f / 1000.0;
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    re += v * (w * i as f64).cos();
                    im += v * (w * i as f64).sin();
                }
                *p += (re * re + im * im) / n as f64;
            }
        }
        let (k, _) = power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((8.0..=13.0).contains(&freqs[k]), "peak at {} Hz", freqs[k]);
    }
}
