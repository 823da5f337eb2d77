//! Flat `key = value` configuration with dotted keys.
//!
//! Pairs are written `a, b`; lists of pairs separate entries with `;`.
//! `#` starts a comment. Unknown keys are errors.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use vmi_core::synth::{SnrPreset, SynthConfig};
use vmi_core::{AnalysisConfig, SessionKind, Shrinkage};

pub const DEFAULT_GRID_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub analysis: AnalysisConfig,
    pub synth: SynthConfig,
    pub topo_grid_n: usize,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        Self { analysis: AnalysisConfig::default(), synth: SynthConfig::default(), topo_grid_n: DEFAULT_GRID_N }
    }
}

impl ResolvedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).with_context(|| format!("config: reading {}", p.display()))?;
            cfg.apply(&text).with_context(|| format!("config: {}", p.display()))?;
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value).with_context(|| format!("line {}: `{key}`", i + 1))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis.validate().context("config: analysis")?;
        self.synth.validate().context("config: synth")?;
        if self.topo_grid_n < 16 {
            bail!("config: topo.grid_n must be at least 16, got {}", self.topo_grid_n);
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let a = &mut self.analysis;
        let s = &mut self.synth;
        match key {
            "alpha_band_hz" => a.alpha_band_hz = pair(v)?,
            "filter_order" => a.filter_order = num(v)?,
            "epoch_window_s" => a.epoch_window_s = pair(v)?,
            "notch" => a.notch = if v.eq_ignore_ascii_case("none") { None } else { Some(pair(v)?) },
            "ersp.freq_range_hz" => a.ersp_freq_range_hz = pair(v)?,
            "ersp.freq_step_hz" => a.ersp_freq_step_hz = num(v)?,
            "ersp.n_times" => a.ersp_n_times = num(v)?,
            "ersp.window_ms" => a.ersp_window_ms = num(v)?,
            "ersp.epoch_s" => a.ersp_epoch_s = pair(v)?,
            "ersp.baseline_ms" => a.ersp_baseline_ms = num(v)?,
            "topo.windows_ms" => a.topo_windows_ms = v.split(';').map(pair).collect::<Result<_>>()?,
            "topo.grid_n" => self.topo_grid_n = num(v)?,
            "csp.n_pairs" => a.n_csp_pairs = num(v)?,
            "shrinkage" => {
                a.shrinkage =
                    if v.eq_ignore_ascii_case("analytic") { Shrinkage::Analytic } else { Shrinkage::Fixed(num(v)?) }
            }
            "cv.folds" => a.cv.folds = num(v)?,
            "cv.repeats" => a.cv.repeats = num(v)?,
            "cv.stratified" => a.cv.stratified = num(v)?,
            "cv.seed" => a.cv.seed = num(v)?,
            "ovr.standardize" => a.standardize_ovr_scores = num(v)?,
            "synth.session" => s.session_kind = v.parse::<SessionKind>().map_err(|e| anyhow!(e))?,
            "synth.preset" => s.preset = v.parse::<SnrPreset>().map_err(|e| anyhow!(e))?,
            "synth.n_trials_per_class" => s.n_trials_per_class = num(v)?,
            "synth.fs_hz" => s.fs_hz = num(v)?,
            "synth.rest_s" => s.rest_s = num(v)?,
            "synth.cue_s" => s.cue_s = num(v)?,
            "synth.task_s" => s.task_s = num(v)?,
            "synth.class_amplitudes_uv" => {
                let xs: Vec<f64> = v.split(',').map(num).collect::<Result<_>>()?;
                s.class_amplitudes_uv =
                    Some(xs.try_into().map_err(|xs: Vec<f64>| anyhow!("expected 4 amplitudes, got {}", xs.len()))?);
            }
            "synth.gain" => s.gain = num(v)?,
            "synth.alpha_hz" => s.alpha_hz = num(v)?,
            "synth.alpha_jitter_hz" => s.alpha_jitter_hz = num(v)?,
            "synth.background_alpha_uv" => s.background_alpha_uv = num(v)?,
            "synth.evoked_uv" => s.evoked_uv = num(v)?,
            "synth.pink_uv" => s.pink_uv = num(v)?,
            "synth.pink_shared_fraction" => s.pink_shared_fraction = num(v)?,
            "synth.white_uv" => s.white_uv = num(v)?,
            "synth.n_pink_sources" => s.n_pink_sources = num(v)?,
            "synth.seed" => s.seed = num(v)?,
            "synth.mixing_seed" => s.mixing_seed = num(v)?,
            _ => bail!("unknown key"),
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| anyhow!("invalid value `{}`: {e}", v.trim()))
}

fn pair(v: &str) -> Result<(f64, f64)> {
    match v.split(',').collect::<Vec<_>>()[..] {
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => bail!("expected a pair `a, b`, got `{}`", v.trim()),
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
