//! Oracle accuracy with the generative parameters known.
//!
//! Band-passed trials are treated as zero-mean Gaussian with covariance
//! `Sigma_c = Sigma_0 + kappa_c p_c p_c^T`, where `Sigma_0` (everything shared
//! between classes) is estimated from class-free trials and `kappa_c` is the
//! in-window power of the planted source after filtering. A test trial with
//! scatter `S` is assigned to `argmax_c -logdet Sigma_c - tr(Sigma_c^-1 S)`,
//! ties to the first class.

use nalgebra::DMatrix;
use ndarray::Array2;

use super::{ForwardModel, SynthConfig, SynthError};
use crate::config::AnalysisConfig;
use crate::dsp::{apply_zero_phase, design_butterworth_bandpass};
use crate::linalg::to_na;
use crate::types::{window_samples, ClassLabel};

/// Stream offsets keep calibration and test trials away from session trials.
const CALIBRATION_STREAM: u64 = 1 << 40;
const TEST_STREAM: u64 = 1 << 41;

/// [`bayes_reference_accuracy_with`] under the default analysis settings.
pub fn bayes_reference_accuracy(cfg: &SynthConfig, n_mc: usize) -> Result<f64, SynthError> {
    bayes_reference_accuracy_with(cfg, &AnalysisConfig::default(), n_mc)
}

/// Fraction of `n_mc` fresh trials per class assigned to their own class.
pub fn bayes_reference_accuracy_with(
    cfg: &SynthConfig,
    analysis: &AnalysisConfig,
    n_mc: usize,
) -> Result<f64, SynthError> {
    let model = ForwardModel::new(cfg)?;
    if n_mc == 0 {
        return Ok(0.0);
    }
    let (lo, hi) = analysis.alpha_band_hz;
    let filter = design_butterworth_bandpass(analysis.filter_order, lo, hi, cfg.fs_hz)
        .map_err(|_| SynthError::AlphaOutOfRange { alpha_hz: cfg.alpha_hz, jitter_hz: cfg.alpha_jitter_hz })?;
    let start = cfg.rest_samples() as i64 + (analysis.epoch_window_s.0 * cfg.fs_hz).round() as i64;
    let len = window_samples(analysis.epoch_window_s, cfg.fs_hz);
    let start = start.clamp(0, cfg.trial_samples() as i64) as usize;
    let end = (start + len).min(cfg.trial_samples());

    let scatter = |x: Array2<f64>| -> DMatrix<f64> {
        let mut y = Array2::<f64>::zeros((x.nrows(), end - start));
        for (mut out, row) in y.rows_mut().into_iter().zip(x.rows()) {
            let f = apply_zero_phase(&filter, &row.to_vec()).expect("trial longer than filter padding");
            out.assign(&ndarray::ArrayView1::from(&f[start..end]));
        }
        let n = y.ncols() as f64;
        let mean = y.mean_axis(ndarray::Axis(1)).expect("non-empty window");
        let c = y.dot(&y.t()) / n
            - mean.view().insert_axis(ndarray::Axis(1)).dot(&mean.view().insert_axis(ndarray::Axis(0)));
        to_na(&(c * (n / (n - 1.0))))
    };

    let n_cal = n_mc.max(64) * 2;
    let n_ch = model.montage.len();
    let mut common = DMatrix::<f64>::zeros(n_ch, n_ch);
    for i in 0..n_cal {
        common += scatter(model.trial(None, CALIBRATION_STREAM + i as u64));
    }
    common /= n_cal as f64;

    // Source power after filtering: mean env^2 over the window times the
    // expected |H|^4 over the jitter range, times a^2 / 2.
    let rest = cfg.rest_samples();
    let env2 =
        (start..end).map(|i| cfg.envelope((i - rest) as f64 / cfg.fs_hz).powi(2)).sum::<f64>() / (end - start) as f64;
    let grid = 401;
    let gain4 = (0..grid)
        .map(|k| {
            let f = cfg.alpha_hz - cfg.alpha_jitter_hz + 2.0 * cfg.alpha_jitter_hz * k as f64 / (grid - 1) as f64;
            filter.magnitude(f).powi(4)
        })
        .sum::<f64>()
        / grid as f64;

    let mut classes = Vec::with_capacity(4);
    for c in ClassLabel::ALL {
        let a = model.amplitudes[c.index()];
        let kappa = a * a / 2.0 * env2 * gain4;
        let p = DMatrix::from_iterator(n_ch, 1, model.patterns[c.index()].iter().copied());
        let sigma = &common + &p * p.transpose() * kappa;
        let chol = sigma.cholesky().expect("common covariance includes white noise");
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        classes.push((logdet, chol.inverse()));
    }

    let mut correct = 0usize;
    for i in 0..n_mc {
        for c in ClassLabel::ALL {
            let stream = TEST_STREAM + (4 * i + c.index()) as u64;
            let sh = scatter(model.trial(Some(c), stream));
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (k, (logdet, inv)) in classes.iter().enumerate() {
                let ll = -logdet - inv.component_mul(&sh).sum();
                if ll > best.0 {
                    best = (ll, k);
                }
            }
            if best.1 == c.index() {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / (4 * n_mc) as f64)
}
