//! IIR design: Butterworth band-pass via analog prototype and bilinear
//! transform, and a second-order notch. Filters are stored as cascaded
//! second-order sections with `a0 = 1`.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::DspError;

type C64 = Complex<f64>;

/// One biquad: `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Sos {
    /// Largest pole modulus of the section.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.abs().sqrt()
        } else {
            let s = disc.sqrt();
            ((-self.a1 + s) / 2.0).abs().max(((-self.a1 - s) / 2.0).abs())
        }
    }

    fn response(&self, z_inv: C64) -> C64 {
        let z2 = z_inv * z_inv;
        let num = C64::new(self.b0, 0.0) + z_inv * self.b1 + z2 * self.b2;
        let den = C64::new(1.0, 0.0) + z_inv * self.a1 + z2 * self.a2;
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    ButterworthBandpass,
    Notch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub kind: FilterKind,
    pub order: usize,
    pub band_hz: (f64, f64),
    pub fs_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirFilter {
    pub sections: Vec<Sos>,
    pub design: FilterDesign,
}

impl IirFilter {
    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> C64 {
        let w = 2.0 * PI * f_hz / self.design.fs_hz;
        let z_inv = C64::from_polar(1.0, -w);
        self.sections.iter().fold(C64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm()
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.magnitude(f_hz).log10()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(|s| s.pole_radius() < 1.0)
    }

    /// Padding used by zero-phase filtering: `3 * (2 * sections + 1)`.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }
}

/// Digital Butterworth band-pass from an `order`-pole analog lowpass
/// prototype. The result has `order` sections and `2 * order` poles; the band
/// edges are prewarped so that both sit at -3 dB.
pub fn design_butterworth_bandpass(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Result<IirFilter, DspError> {
    if order == 0 {
        return Err(DspError::InvalidOrder(order));
    }
    if !(fs_hz > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs_hz / 2.0) {
        return Err(DspError::InvalidBand { low_hz, high_hz, fs_hz });
    }
    let fs2 = 2.0 * fs_hz;
    let w_lo = fs2 * (PI * low_hz / fs_hz).tan();
    let w_hi = fs2 * (PI * high_hz / fs_hz).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    // analog lowpass prototype poles on the left half of the unit circle
    let n = order as f64;
    let proto: Vec<C64> = (0..order)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            C64::from_polar(1.0, theta)
        })
        .collect();

    // lowpass -> bandpass: each prototype pole p yields the roots of
    // s^2 - p*bw*s + w0^2
    let mut analog_poles = Vec::with_capacity(2 * order);
    for &p in &proto {
        let pb = p * bw;
        let disc = (pb * pb - C64::new(4.0 * w0_sq, 0.0)).sqrt();
        analog_poles.push((pb + disc) / 2.0);
        analog_poles.push((pb - disc) / 2.0);
    }
    // `order` zeros at s = 0, `order` at infinity; gain bw^order
    let analog_gain = bw.powi(order as i32);

    let digital_poles: Vec<C64> =
        analog_poles.iter().map(|&s| (C64::new(fs2, 0.0) + s) / (C64::new(fs2, 0.0) - s)).collect();
    let mut gain = C64::new(analog_gain * fs2.powi(order as i32), 0.0);
    for &s in &analog_poles {
        gain /= C64::new(fs2, 0.0) - s;
    }
    let gain = gain.re;

    let pairs = pair_poles(&digital_poles);
    let section_gain = gain.abs().powf(1.0 / n);
    let sign = gain.signum();
    let mut sections: Vec<Sos> =
        pairs.into_iter().map(|(a1, a2)| Sos { b0: section_gain, b1: 0.0, b2: -section_gain, a1, a2 }).collect();
    sections.sort_by(|x, y| x.pole_radius().total_cmp(&y.pole_radius()));
    if sign < 0.0 {
        let s = &mut sections[0];
        s.b0 = -s.b0;
        s.b2 = -s.b2;
    }
    Ok(IirFilter {
        sections,
        design: FilterDesign { kind: FilterKind::ButterworthBandpass, order, band_hz: (low_hz, high_hz), fs_hz },
    })
}

/// Groups poles into real-coefficient denominators `(a1, a2)`. Complex poles
/// are matched with their conjugates, real poles are paired in order.
fn pair_poles(poles: &[C64]) -> Vec<(f64, f64)> {
    const TOL: f64 = 1e-10;
    let mut complex: Vec<C64> = poles.iter().copied().filter(|p| p.im > TOL).collect();
    complex.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= TOL).map(|p| p.re).collect();
    real.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<(f64, f64)> = complex.iter().map(|p| (-2.0 * p.re, p.norm_sqr())).collect();
    for pair in real.chunks(2) {
        match *pair {
            [r1, r2] => out.push((-(r1 + r2), r1 * r2)),
            [r] => out.push((-r, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}

/// Second-order notch with zeros on the unit circle at `f0_hz` and a -3 dB
/// width of `f0_hz / q`.
pub fn design_notch(f0_hz: f64, q: f64, fs_hz: f64) -> Result<IirFilter, DspError> {
    if !(fs_hz > 0.0) || !(f0_hz > 0.0) || !(f0_hz < fs_hz / 2.0) {
        return Err(DspError::InvalidBand { low_hz: f0_hz, high_hz: f0_hz, fs_hz });
    }
    if !(q > 0.0) {
        return Err(DspError::InvalidQ(q));
    }
    let w0 = 2.0 * PI * f0_hz / fs_hz;
    let bw = w0 / q;
    let beta = (bw / 2.0).tan();
    let g = 1.0 / (1.0 + beta);
    let c = w0.cos();
    let section = Sos { b0: g, b1: -2.0 * g * c, b2: g, a1: -2.0 * g * c, a2: 2.0 * g - 1.0 };
    Ok(IirFilter {
        sections: vec![section],
        design: FilterDesign { kind: FilterKind::Notch, order: 2, band_hz: (f0_hz, f0_hz), fs_hz },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> IirFilter {
        design_butterworth_bandpass(3, 8.0, 13.0, 1000.0).unwrap()
    }

    #[test]
    fn band_edges_and_centre() {
        let f = alpha();
        assert_eq!(f.sections.len(), 3);
        assert!((f.magnitude_db(8.0) + 3.0103).abs() < 0.1);
        assert!((f.magnitude_db(13.0) + 3.0103).abs() < 0.1);
        assert!(f.magnitude_db((8.0f64 * 13.0).sqrt()).abs() < 0.1);
        assert!(f.magnitude(0.0) < 1e-12);
    }

    // Poles of scipy.signal.butter(3, [8, 13], 'band', fs=1000, output='zpk'),
    // upper half plane.
    #[allow(clippy::excessive_precision)]
    const REFERENCE_POLES: [(f64, f64); 3] = [
        (9.87488700887702575e-01, 7.78351002432780964e-02),
        (9.82513106533781655e-01, 6.11180225721600009e-02),
        (9.92490997799021724e-01, 5.11081704310685850e-02),
    ];

    #[test]
    fn poles_match_reference_design() {
        let f = alpha();
        for (re, im) in REFERENCE_POLES {
            let (a1, a2) = (-2.0 * re, re * re + im * im);
            assert!(
                f.sections.iter().any(|s| (s.a1 - a1).abs() < 1e-12 && (s.a2 - a2).abs() < 1e-12),
                "missing pole {re}+{im}i"
            );
        }
        // overall gain: scipy's k = 3.7568380197512608e-06
        let k: f64 = f.sections.iter().map(|s| s.b0).product();
        assert!((k - 3.7568380197512608e-06).abs() < 1e-18);
    }

    #[test]
    fn stable_across_orders_and_bands() {
        for order in 1..=8 {
            for &(lo, hi, fs) in &[
                (8.0, 13.0, 1000.0),
                (1.0, 40.0, 250.0),
                (0.5, 100.0, 500.0),
                (30.0, 45.0, 1000.0),
                (1.0, 400.0, 1000.0),
            ] {
                let f = design_butterworth_bandpass(order, lo, hi, fs).unwrap();
                assert_eq!(f.sections.len(), order);
                assert!(f.is_stable(), "order {order} band {lo}-{hi}");
                assert!((f.magnitude_db(lo) + 3.0103).abs() < 0.01);
                assert!((f.magnitude_db(hi) + 3.0103).abs() < 0.01);
            }
        }
    }

    #[test]
    fn invalid_bands() {
        assert!(matches!(design_butterworth_bandpass(3, 13.0, 8.0, 1000.0), Err(DspError::InvalidBand { .. })));
        assert!(matches!(design_butterworth_bandpass(3, 8.0, 600.0, 1000.0), Err(DspError::InvalidBand { .. })));
        assert!(matches!(design_butterworth_bandpass(3, 0.0, 13.0, 1000.0), Err(DspError::InvalidBand { .. })));
        assert!(matches!(design_butterworth_bandpass(0, 8.0, 13.0, 1000.0), Err(DspError::InvalidOrder(0))));
    }

    #[test]
    fn notch_response() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        assert!(f.magnitude_db(60.0) < -60.0);
        assert!(f.magnitude_db(10.0).abs() < 0.1);
        assert!(f.is_stable());
        // scipy.signal.iirnotch(60, 30, 1000)
        let s = f.sections[0];
        assert!((s.b0 - 0.9937559649536571).abs() < 1e-15);
        assert!((s.b1 + 1.8479418578501994).abs() < 1e-15);
        assert!((s.a2 - 0.9875119299073143).abs() < 1e-15);
        assert!(matches!(design_notch(600.0, 30.0, 1000.0), Err(DspError::InvalidBand { .. })));
        assert!(matches!(design_notch(60.0, 0.0, 1000.0), Err(DspError::InvalidQ(_))));
    }
}
