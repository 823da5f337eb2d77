//! Fixtures shared by the benchmarks.

use ndarray::{Array2, Array3};
use vmi_core::csp::TrialCovariances;
use vmi_core::pipeline::alpha_epochs;
use vmi_core::synth::{generate_session, SnrPreset, SynthConfig};
use vmi_core::{AnalysisConfig, ClassLabel, ContinuousRecording, EpochSet, SessionKind};

/// High-preset imagery session with `per_class` trials of each class.
pub fn session(per_class: usize) -> ContinuousRecording {
    let mut cfg = SynthConfig::preset(SnrPreset::High, SessionKind::Imagery, 1);
    cfg.n_trials_per_class = per_class;
    generate_session(&cfg).expect("synthetic session")
}

pub fn alpha_set(per_class: usize) -> EpochSet {
    alpha_epochs(session(per_class), &AnalysisConfig::default()).expect("alpha epochs")
}

pub fn covariances(per_class: usize) -> (TrialCovariances, Vec<ClassLabel>) {
    let es = alpha_set(per_class);
    (TrialCovariances::from_epochs(&es), es.labels().to_vec())
}

/// Deterministic SPD matrix, `a a^T + d I` with a fixed pseudo-random `a`.
pub fn spd(d: usize, salt: u64) -> Array2<f64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ salt;
    let a = Array2::from_shape_simple_fn((d, d), || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    a.dot(&a.t()) + Array2::<f64>::eye(d) * d as f64 * 0.01
}

/// `n` one-channel tone epochs on Oz, 5 s at 1 kHz.
pub fn oz_tones(n: usize, window_s: (f64, f64)) -> EpochSet {
    let montage = vmi_core::default_montage().subset(&["Oz"]).expect("Oz");
    let len = ((window_s.1 - window_s.0) * 1000.0).round() as usize;
    let data = Array3::from_shape_fn((n, 1, len), |(k, _, i)| (0.0628 * i as f64 + k as f64).sin());
    EpochSet::new(data, vec![ClassLabel::EatingFood; n], window_s, 1000.0, montage).expect("epochs")
}
