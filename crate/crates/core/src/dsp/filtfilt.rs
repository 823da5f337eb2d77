//! Causal and zero-phase application of second-order-section cascades.

use super::iir::{IirFilter, Sos};
use super::DspError;

/// Steady-state section states for a unit step input, so that filtering can
/// start from `zi * x[0]` without a transient.
pub fn sos_initial_state(sections: &[Sos]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            // (I - A^T) zi = b[1:] - a[1:] * b0, with A the companion matrix of a
            let (m00, m01, m10, m11) = (1.0 + s.a1, -1.0, s.a2, 1.0);
            let r0 = s.b1 - s.a1 * s.b0;
            let r1 = s.b2 - s.a2 * s.b0;
            let det = m00 * m11 - m01 * m10;
            let z0 = (r0 * m11 - m01 * r1) / det;
            let z1 = (m00 * r1 - m10 * r0) / det;
            let zi = [scale * z0, scale * z1];
            scale *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
            zi
        })
        .collect()
}

/// Transposed direct form II filtering in place, with per-section state.
pub fn sos_filter_in_place(sections: &[Sos], state: &mut [[f64; 2]], x: &mut [f64]) {
    for (s, z) in sections.iter().zip(state.iter_mut()) {
        let (b0, b1, b2, a1, a2) = (s.b0, s.b1, s.b2, s.a1, s.a2);
        let (mut z0, mut z1) = (z[0], z[1]);
        for v in x.iter_mut() {
            let xi = *v;
            let y = b0 * xi + z0;
            z0 = b1 * xi - a1 * y + z1;
            z1 = b2 * xi - a2 * y;
            *v = y;
        }
        *z = [z0, z1];
    }
}

/// Causal filtering from a zero state.
pub fn apply_causal(f: &IirFilter, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    let mut state = vec![[0.0; 2]; f.sections.len()];
    sos_filter_in_place(&f.sections, &mut state, &mut out);
    out
}

/// Forward-backward filtering with odd-reflection padding of
/// `f.pad_len()` samples at both ends and steady-state initial conditions.
/// The magnitude response is `|H|^2` and the phase is zero.
pub fn apply_zero_phase(f: &IirFilter, x: &[f64]) -> Result<Vec<f64>, DspError> {
    let pad = f.pad_len();
    if x.len() <= pad {
        return Err(DspError::SignalTooShort { len: x.len(), min: pad + 1 });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (x[0], x[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    let zi = sos_initial_state(&f.sections);
    let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
    sos_filter_in_place(&f.sections, &mut state, &mut ext);

    ext.reverse();
    let y0 = ext[0];
    let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * y0, z[1] * y0]).collect();
    sos_filter_in_place(&f.sections, &mut state, &mut ext);
    ext.reverse();

    ext.truncate(pad + n);
    ext.drain(..pad);
    Ok(ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{design_butterworth_bandpass, design_notch};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn alpha() -> IirFilter {
        design_butterworth_bandpass(3, 8.0, 13.0, 1000.0).unwrap()
    }

    fn sine(f: f64, amp: f64, n: usize, fs: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn matches_reference_forward_backward() {
        // scipy.signal.sosfiltfilt(butter(3, [8, 13], 'band', fs=1000, output='sos'), x)
        let x: Vec<f64> = (0..600)
            .map(|i| {
                let n = i as f64;
                (2.0 * PI * 10.0 * n / 1000.0).sin()
                    + 0.5 * (2.0 * PI * 3.0 * n / 1000.0 + 0.3).cos()
                    + 0.002 * n
                    + 0.3 * (2.0 * PI * 47.0 * n / 1000.0).sin()
            })
            .collect();
        let y = apply_zero_phase(&alpha(), &x).unwrap();
        let idx = [0, 1, 50, 137, 299, 300, 451, 598, 599];
        let expect = [
            0.05394541594254802,
            0.09222353441949889,
            -0.0750069498087225,
            0.7033230277358984,
            -0.15564290318965546,
            -0.08782466542019265,
            0.07650029478545856,
            -0.00528763630031245,
            -0.00441076373221158,
        ];
        for (&i, &e) in idx.iter().zip(&expect) {
            assert!((y[i] - e).abs() < 1e-9, "sample {i}: {} vs {e}", y[i]);
        }
    }

    #[test]
    fn centre_tone_passes_unchanged() {
        let fs = 1000.0;
        let x = sine((8.0f64 * 13.0).sqrt(), 1.0, 10_000, fs);
        let y = apply_zero_phase(&alpha(), &x).unwrap();
        assert_eq!(y.len(), x.len());
        let central = 1000..9000;
        let peak_in = x[central.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let peak_out = y[central].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak_out / peak_in - 1.0).abs() < 0.01, "ratio {}", peak_out / peak_in);
    }

    #[test]
    fn line_frequency_is_rejected() {
        let x = sine(60.0, 1.0, 10_000, 1000.0);
        let y = apply_zero_phase(&alpha(), &x).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        let att = 20.0 * (rms(&y[1000..9000]) / rms(&x[1000..9000])).log10();
        // |H(60 Hz)|^2 of the designed filter is about -128.6 dB
        let expected = 2.0 * alpha().magnitude_db(60.0);
        assert!(expected < -60.0);
        assert!(att <= -60.0, "attenuation {att} dB");
    }

    #[test]
    fn zeros_stay_zero_and_short_input_rejected() {
        let y = apply_zero_phase(&alpha(), &[0.0; 100]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        assert_eq!(apply_zero_phase(&alpha(), &[1.0; 21]).unwrap_err(), DspError::SignalTooShort { len: 21, min: 22 });
    }

    #[test]
    fn no_lag_between_input_and_output() {
        let fs = 1000.0;
        // band-limited input: sum of in-band tones
        let x: Vec<f64> = (0..4000)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 9.3 * t).sin()
                    + 0.7 * (2.0 * PI * 11.1 * t + 1.0).sin()
                    + 0.4 * (2.0 * PI * 12.2 * t + 0.3).sin()
            })
            .collect();
        let y = apply_zero_phase(&alpha(), &x).unwrap();
        let core = 500..3500;
        let xcorr = |lag: i64| -> f64 { core.clone().map(|i| x[i] * y[(i as i64 + lag) as usize]).sum() };
        let best = (-40..=40).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn notch_removes_line_noise() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        let x: Vec<f64> =
            sine(60.0, 1.0, 5000, 1000.0).iter().zip(sine(10.0, 1.0, 5000, 1000.0)).map(|(a, b)| a + b).collect();
        let y = apply_zero_phase(&f, &x).unwrap();
        let clean = sine(10.0, 1.0, 5000, 1000.0);
        let err = y[1000..4000].iter().zip(&clean[1000..4000]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.01, "residual {err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linear(
            xs in proptest::collection::vec(-100.0f64..100.0, 200),
            ys in proptest::collection::vec(-100.0f64..100.0, 200),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let f = alpha();
            let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let lhs = apply_zero_phase(&f, &mix).unwrap();
            let fx = apply_zero_phase(&f, &xs).unwrap();
            let fy = apply_zero_phase(&f, &ys).unwrap();
            let scale = lhs.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
            for i in 0..lhs.len() {
                let rhs = a * fx[i] + b * fy[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}
