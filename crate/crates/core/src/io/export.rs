//! Epoch exports: long-format CSV and JSON.

use std::fmt::Write as _;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::montage::Montage;
use crate::types::{ClassLabel, EpochSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExportLayout {
    /// `trial,label,channel,time_s,uV`, one row per sample.
    LongCsv,
    Json,
}

/// `printf("%.{digits}g")`: shortest of fixed/scientific notation with
/// trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Serialize, Deserialize)]
struct EpochSetJson {
    window_s: (f64, f64),
    sample_rate_hz: f64,
    montage: Montage,
    labels: Vec<ClassLabel>,
    /// `[n_trials, n_channels, n_samples]`
    shape: [usize; 3],
    data: Vec<f64>,
}

/// Deterministic export. CSV values carry 6 significant digits; JSON keeps
/// shortest round-trip floats so that [`import_epochs_json`] restores the set
/// exactly.
pub fn export_epochs(es: &EpochSet, layout: ExportLayout) -> Vec<u8> {
    match layout {
        ExportLayout::LongCsv => {
            let mut out = String::from("trial,label,channel,time_s,uV\n");
            let (t0, _) = es.window_s();
            let fs = es.sample_rate_hz();
            let labels: Vec<&str> = es.montage().labels().collect();
            for (t, trial) in es.data().outer_iter().enumerate() {
                let label = es.labels()[t];
                for (c, row) in trial.outer_iter().enumerate() {
                    for (s, &v) in row.iter().enumerate() {
                        let time = t0 + s as f64 / fs;
                        let _ = writeln!(out, "{t},{label},{},{},{}", labels[c], format_sig(time, 6), format_sig(v, 6));
                    }
                }
            }
            out.into_bytes()
        }
        ExportLayout::Json => {
            let doc = EpochSetJson {
                window_s: es.window_s(),
                sample_rate_hz: es.sample_rate_hz(),
                montage: es.montage().clone(),
                labels: es.labels().to_vec(),
                shape: [es.n_trials(), es.n_channels(), es.n_samples()],
                data: es.data().iter().copied().collect(),
            };
            serde_json::to_vec_pretty(&doc).expect("epoch JSON serialization")
        }
    }
}

pub fn import_epochs_json(bytes: &[u8]) -> Result<EpochSet, IoError> {
    let doc: EpochSetJson = serde_json::from_slice(bytes)?;
    let [t, c, s] = doc.shape;
    let data = Array3::from_shape_vec((t, c, s), doc.data)
        .map_err(|e| IoError::InvalidValue { key: "shape".into(), value: e.to_string() })?;
    let montage = Montage::new(doc.montage.channels().to_vec(), doc.montage.occipital_cluster().to_vec())
        .map_err(|e| IoError::InvalidValue { key: "montage".into(), value: e.to_string() })?;
    Ok(EpochSet::new(data, doc.labels, doc.window_s, doc.sample_rate_hz, montage)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montage::default_montage;

    #[test]
    fn sig6_matches_printf() {
        // python: '%.6g' % x
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1 + 0.2, "0.3"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001234567, "0.000123457"),
            (0.00001234567, "1.23457e-05"),
            (999999.5, "1e+06"),
            (1.23456789, "1.23457"),
            (-0.0005, "-0.0005"),
            (1e-300, "1e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig(x, 6), want, "{x}");
        }
    }

    fn tiny(trials: usize, samples: usize) -> EpochSet {
        let m = default_montage().subset(&["Oz"]).unwrap();
        let data = Array3::from_shape_fn((trials, 1, samples), |(t, _, s)| 1.0 / 3.0 + (t * 10 + s) as f64);
        EpochSet::new(data, vec![ClassLabel::OpeningDoor; trials], (0.5, 0.5 + samples as f64 / 1000.0), 1000.0, m)
            .unwrap()
    }

    #[test]
    fn csv_rows() {
        let text = String::from_utf8(export_epochs(&tiny(1, 2), ExportLayout::LongCsv)).unwrap();
        assert_eq!(
            text,
            "trial,label,channel,time_s,uV\n0,OpeningDoor,Oz,0.5,0.333333\n0,OpeningDoor,Oz,0.501,1.33333\n"
        );
        let empty = EpochSet::new(
            Array3::zeros((0, 1, 2)),
            vec![],
            (0.5, 0.502),
            1000.0,
            default_montage().subset(&["Oz"]).unwrap(),
        )
        .unwrap();
        assert_eq!(export_epochs(&empty, ExportLayout::LongCsv), b"trial,label,channel,time_s,uV\n");
    }

    #[test]
    fn json_roundtrip() {
        let es = tiny(3, 5);
        let bytes = export_epochs(&es, ExportLayout::Json);
        assert_eq!(import_epochs_json(&bytes).unwrap(), es);
        assert_eq!(export_epochs(&es, ExportLayout::Json), bytes);
    }
}
