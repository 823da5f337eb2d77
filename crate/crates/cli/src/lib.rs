//! The `vmi` command line: synthesis, conversion, evaluation, training,
//! prediction, ERSP and topography exports.
//!
//! Every command writes its artifacts plus a `<command>.manifest.json` and
//! prints nothing on success. Artifacts depend only on inputs, config and
//! seed; wall-clock times appear in the manifest alone.

pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use vmi_core::classify::{
    cross_validate_cached, predict, render_report, train_ovr, CvMode, OvrClassifier, TableLayout,
};
use vmi_core::csp::TrialCovariances;
use vmi_core::io::{
    export_epochs, parse_header_bytes, read_brainvision, write_brainvision, Encoding, ExportLayout, MarkerMap,
    WriteOptions,
};
use vmi_core::pipeline::alpha_epochs;
use vmi_core::synth::{generate_session, SnrPreset};
use vmi_core::timefreq::{
    alpha_topography, ersp_csv, ersp_from_recording, frame_csv, heatmap_svg, interpolate_scalp, scalp_svg,
    topography_epochs, TopoMode, DB_CLIP,
};
use vmi_core::{default_montage, AnalysisConfig, ContinuousRecording, SessionKind};

use config::ResolvedConfig;
use manifest::ManifestBuilder;

#[derive(Debug, Parser)]
#[command(name = "vmi", version, about = "Offline EEG decoding for visual motion imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Null,
    Low,
    High,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Session {
    Imagery,
    Perception,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalMode {
    #[value(name = "4class")]
    FourClass,
    Ovr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopoArg {
    Raw,
    Db,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncodingArg {
    Float32,
    Int16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic session as a BrainVision triple.
    Synth {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, value_enum)]
        session: Option<Session>,
        #[arg(long, env = "VMI_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        trials_per_class: Option<usize>,
        #[arg(long, value_enum, default_value = "float32")]
        encoding: EncodingArg,
        /// File stem of the triple.
        #[arg(long, default_value = "recording")]
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Export raw epochs of a recording as long CSV or JSON.
    Convert {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        layout: LayoutArg,
        #[command(flatten)]
        common: Common,
    },
    /// Repeated stratified cross-validation.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "4class")]
        mode: EvalMode,
        /// Report path; the rendered table goes next to it as `.txt`.
        #[arg(long)]
        json: PathBuf,
        #[arg(long, env = "VMI_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the one-vs-rest classifier on all trials.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Apply a trained model to a recording.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// ERSP of one channel: CSV matrix, axes sidecar and heatmap.
    Ersp {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "Oz")]
        channel: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Alpha-band topography per time window.
    Topo {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "db")]
        mode: TopoArg,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// A trained model with the settings it was trained under.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub analysis: AnalysisConfig,
    pub classifier: OvrClassifier,
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command_line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = Cli::try_parse_from(&args)?;
    match cli.command {
        Command::Synth { preset, session, seed, trials_per_class, encoding, name, out, common } => {
            let mut cfg = ResolvedConfig::load(common.config.as_deref())?;
            if let Some(p) = preset {
                cfg.synth.preset = match p {
                    Preset::Null => SnrPreset::Null,
                    Preset::Low => SnrPreset::Low,
                    Preset::High => SnrPreset::High,
                };
            }
            if let Some(s) = session {
                cfg.synth.session_kind = match s {
                    Session::Imagery => SessionKind::Imagery,
                    Session::Perception => SessionKind::Perception,
                };
            }
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            if let Some(n) = trials_per_class {
                cfg.synth.n_trials_per_class = n;
            }
            cfg.validate()?;
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), Some(cfg.synth.seed));
            add_config_input(&mut m, &common);
            let rec = generate_session(&cfg.synth).context("synth")?;
            ensure_dir(&out)?;
            let encoding = match encoding {
                EncodingArg::Float32 => Encoding::Float32,
                EncodingArg::Int16 => Encoding::Int16 { resolution_uv: None },
            };
            let opts = WriteOptions { base_name: name, encoding, ..Default::default() };
            let paths =
                write_brainvision(&rec, &out, &opts).with_context(|| format!("io: writing into {}", out.display()))?;
            paths.iter().for_each(|p| m.output(p));
            m.write(&out.join("synth.manifest.json"))?;
        }
        Command::Convert { data, out, layout, common } => {
            let cfg = ResolvedConfig::load(common.config.as_deref())?;
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), None);
            add_config_input(&mut m, &common);
            let (rec, inputs) = load(&data)?;
            inputs.into_iter().for_each(|p| m.input(p));
            let es = vmi_core::dsp::extract_epochs(&rec, cfg.analysis.epoch_window_s, rec.session_kind.onset_kind())
                .context("dsp")?;
            let layout = match layout {
                LayoutArg::Csv => ExportLayout::LongCsv,
                LayoutArg::Json => ExportLayout::Json,
            };
            write(&out, &export_epochs(&es, layout))?;
            m.output(&out);
            m.write(&sidecar(&out, "manifest.json"))?;
        }
        Command::Eval { data, mode, json, seed, common } => {
            let mut cfg = ResolvedConfig::load(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.analysis.cv.seed = s;
            }
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), Some(cfg.analysis.cv.seed));
            add_config_input(&mut m, &common);
            let (rec, inputs) = load(&data)?;
            inputs.iter().for_each(|p| m.input(p));
            let subject = inputs[0].file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let session = rec.session_kind.to_string();
            let es = alpha_epochs(rec, &cfg.analysis).context("dsp")?;
            let cache = TrialCovariances::from_epochs(&es);
            let labels = es.labels().to_vec();
            drop(es);
            let mut grid: IndexMap<String, IndexMap<String, _>> = IndexMap::new();
            let layout = match mode {
                EvalMode::FourClass => {
                    let r =
                        cross_validate_cached(&cache, &labels, &cfg.analysis, CvMode::FourClass).context("classify")?;
                    grid.entry(session).or_default().insert(subject, r);
                    TableLayout::TableI
                }
                EvalMode::Ovr => {
                    for c in vmi_core::ClassLabel::ALL {
                        let r = cross_validate_cached(&cache, &labels, &cfg.analysis, CvMode::BinaryOvr(c))
                            .context("classify")?;
                        grid.entry(c.to_string()).or_default().insert(subject.clone(), r);
                    }
                    TableLayout::TableII
                }
            };
            let mut body = serde_json::to_string_pretty(&grid)?;
            body.push('\n');
            write(&json, body.as_bytes())?;
            let table = json.with_extension("txt");
            write(&table, render_report(&grid, layout).as_bytes())?;
            m.output(&json);
            m.output(&table);
            m.write(&sidecar(&json, "manifest.json"))?;
        }
        Command::Train { data, out, common } => {
            let cfg = ResolvedConfig::load(common.config.as_deref())?;
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), None);
            add_config_input(&mut m, &common);
            let (rec, inputs) = load(&data)?;
            inputs.into_iter().for_each(|p| m.input(p));
            let es = alpha_epochs(rec, &cfg.analysis).context("dsp")?;
            let classifier = train_ovr(&es, &cfg.analysis).context("classify")?;
            let model = ModelFile { analysis: cfg.analysis, classifier };
            let mut body = serde_json::to_string_pretty(&model)?;
            body.push('\n');
            write(&out, body.as_bytes())?;
            m.output(&out);
            m.write(&sidecar(&out, "manifest.json"))?;
        }
        Command::Predict { data, model, out } => {
            let text = fs::read_to_string(&model).with_context(|| format!("io: reading {}", model.display()))?;
            let mf: ModelFile =
                serde_json::from_str(&text).with_context(|| format!("io: parsing model {}", model.display()))?;
            let digest = config::hex(&<sha2::Sha256 as sha2::Digest>::digest(serde_json::to_vec(&mf.analysis)?));
            let mut m = ManifestBuilder::new(command_line, digest, None);
            m.input(&model);
            let (rec, inputs) = load(&data)?;
            inputs.into_iter().for_each(|p| m.input(p));
            let es = alpha_epochs(rec, &mf.analysis).context("dsp")?;
            let pred = predict(&mf.classifier, &es).context("classify")?;
            let mut csv = String::from("trial,label,predicted\n");
            for (i, (t, p)) in es.labels().iter().zip(&pred).enumerate() {
                csv.push_str(&format!("{i},{t},{p}\n"));
            }
            write(&out, csv.as_bytes())?;
            m.output(&out);
            m.write(&sidecar(&out, "manifest.json"))?;
        }
        Command::Ersp { data, channel, out, common } => {
            let cfg = ResolvedConfig::load(common.config.as_deref())?;
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), None);
            add_config_input(&mut m, &common);
            let (rec, inputs) = load(&data)?;
            inputs.into_iter().for_each(|p| m.input(p));
            let r = ersp_from_recording(&rec, &channel, &cfg.analysis).context("timefreq")?;
            ensure_dir(&out)?;
            let stem = out.join(format!("ersp_{channel}"));
            let csv = stem.with_extension("csv");
            write(&csv, ersp_csv(&r).as_bytes())?;
            let axes = serde_json::json!({
                "channel": r.channel,
                "rows": "freqs_hz",
                "cols": "times_s",
                "shape": [r.freqs_hz.len(), r.times_s.len()],
                "freqs_hz": r.freqs_hz,
                "times_s": r.times_s,
                "baseline": r.baseline,
                "units": "dB",
            });
            let json = stem.with_extension("json");
            write(&json, format!("{}\n", serde_json::to_string_pretty(&axes)?).as_bytes())?;
            // low frequencies at the bottom
            let mut flipped = r.values_db.clone();
            flipped.invert_axis(ndarray::Axis(0));
            let svg = stem.with_extension("svg");
            write(&svg, heatmap_svg(flipped.view(), (-DB_CLIP, DB_CLIP), 3, 6).as_bytes())?;
            [csv, json, svg].iter().for_each(|p| m.output(p));
            m.write(&out.join("ersp.manifest.json"))?;
        }
        Command::Topo { data, mode, out, common } => {
            let cfg = ResolvedConfig::load(common.config.as_deref())?;
            let mut m = ManifestBuilder::new(command_line, cfg.digest(), None);
            add_config_input(&mut m, &common);
            let (rec, inputs) = load(&data)?;
            inputs.into_iter().for_each(|p| m.input(p));
            let es = topography_epochs(&rec, &cfg.analysis).context("timefreq")?;
            drop(rec);
            let mode = match mode {
                TopoArg::Raw => TopoMode::RawPower,
                TopoArg::Db => TopoMode::DbVsBaseline,
            };
            let frames = alpha_topography(&es, &cfg.analysis, mode).context("timefreq")?;
            let range = match mode {
                TopoMode::DbVsBaseline => (-DB_CLIP, DB_CLIP),
                TopoMode::RawPower => {
                    let hi = frames.iter().flat_map(|f| f.values.iter().copied()).fold(0.0, f64::max);
                    (0.0, hi)
                }
            };
            ensure_dir(&out)?;
            for f in &frames {
                let stem = out.join(format!("topo_{}-{}ms", f.window_ms.0, f.window_ms.1));
                let csv = stem.with_extension("csv");
                write(&csv, frame_csv(f).as_bytes())?;
                let svg = stem.with_extension("svg");
                let grid = interpolate_scalp(f, cfg.topo_grid_n);
                write(&svg, scalp_svg(&grid, f, range).as_bytes())?;
                m.output(&csv);
                m.output(&svg);
            }
            m.write(&out.join("topo.manifest.json"))?;
        }
    }
    Ok(())
}

fn add_config_input(m: &mut ManifestBuilder, common: &Common) {
    if let Some(p) = &common.config {
        m.input(p);
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("io: creating {}", dir.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(path, bytes).with_context(|| format!("io: writing {}", path.display()))
}

/// `out.json` -> `out.json.<suffix>`
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// The `.vhdr` named by `data`, or the single one inside it.
fn find_header(data: &Path) -> Result<PathBuf> {
    if data.is_file() {
        return Ok(data.to_path_buf());
    }
    if !data.is_dir() {
        bail!("io: {}: no such file or directory", data.display());
    }
    let mut found: Vec<PathBuf> = fs::read_dir(data)
        .with_context(|| format!("io: listing {}", data.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("vhdr")))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => bail!("io: no .vhdr file in {}", data.display()),
        n => bail!("io: {n} .vhdr files in {}; name one explicitly", data.display()),
    }
}

/// Reads a recording and returns it with the paths of its three files.
fn load(data: &Path) -> Result<(ContinuousRecording, Vec<PathBuf>)> {
    let vhdr = find_header(data)?;
    let rec = read_brainvision(&vhdr, &default_montage(), &MarkerMap::default()).map_err(|e| anyhow!("io: {e}"))?;
    let header = parse_header_bytes(&fs::read(&vhdr)?).map_err(|e| anyhow!("io: {e}"))?;
    let dir = vhdr.parent().unwrap_or(Path::new("."));
    let mut inputs = vec![vhdr.clone()];
    inputs.extend([header.marker_file, header.data_file].into_iter().flatten().map(|f| dir.join(f)));
    Ok((rec, inputs))
}
