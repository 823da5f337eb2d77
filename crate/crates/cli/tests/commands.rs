use std::fs;
use std::path::Path;

use vmi_cli::run;

fn vmi(args: &[&str]) -> anyhow::Result<()> {
    run(std::iter::once("vmi").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, preset: &str, seed: &str, n: &str) {
    vmi(&[
        "synth",
        "--preset",
        preset,
        "--session",
        "imagery",
        "--seed",
        seed,
        "--trials-per-class",
        n,
        "--out",
        p(dir),
    ])
    .unwrap();
}

#[test]
fn synth_writes_triple_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    synth(&out, "high", "7", "4");
    for f in ["recording.vhdr", "recording.vmrk", "recording.eeg", "synth.manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("synth.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["output_digests"].as_object().unwrap().len(), 3);
    // recorded digests match the files
    for (path, digest) in m["output_digests"].as_object().unwrap() {
        assert_eq!(vmi_cli::manifest::file_digest(Path::new(path)).unwrap(), digest.as_str().unwrap());
    }
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "high", "7", "3");
    synth(&b, "high", "7", "3");
    for f in ["recording.vhdr", "recording.vmrk", "recording.eeg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    synth(&c, "high", "8", "3");
    assert_ne!(fs::read(a.join("recording.eeg")).unwrap(), fs::read(c.join("recording.eeg")).unwrap());
}

#[test]
fn eval_ovr_has_four_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "high", "1", "10");
    let cfg = tmp.path().join("fast.cfg");
    fs::write(&cfg, "cv.repeats = 1\ncv.folds = 5\n").unwrap();
    let json = tmp.path().join("r/ovr.json");
    vmi(&["eval", "--data", p(&d), "--mode", "ovr", "--config", p(&cfg), "--json", p(&json)]).unwrap();
    let grid: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(grid.as_object().unwrap().len(), 4);
    let table = fs::read_to_string(json.with_extension("txt")).unwrap();
    for name in ["Eating food", "Opening door", "Picking up a phone", "Pouring water"] {
        assert!(table.contains(name), "{table}");
    }
    assert!(tmp.path().join("r/ovr.json.manifest.json").is_file());
}

#[test]
fn eval_missing_marker_file_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "high", "1", "2");
    fs::remove_file(d.join("recording.vmrk")).unwrap();
    let err = format!("{:#}", vmi(&["eval", "--data", p(&d), "--json", p(&tmp.path().join("r.json"))]).unwrap_err());
    assert!(err.starts_with("io: "), "{err}");
    assert!(err.contains("recording.vmrk"), "{err}");
}

#[test]
fn ersp_shape_and_unknown_channel() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "high", "2", "2");
    let out = tmp.path().join("e");
    vmi(&["ersp", "--data", p(&d), "--channel", "Oz", "--out", p(&out)]).unwrap();
    let csv = fs::read_to_string(out.join("ersp_Oz.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 48);
    assert!(rows.iter().all(|r| r.split(',').count() == 200));
    assert!(fs::read_to_string(out.join("ersp_Oz.svg")).unwrap().starts_with("<svg"));

    let err = format!("{:#}", vmi(&["ersp", "--data", p(&d), "--channel", "XX", "--out", p(&out)]).unwrap_err());
    assert!(err.contains("timefreq") && err.contains("XX") && err.contains("Oz"), "{err}");
}

#[test]
fn topo_writes_four_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "high", "3", "2");
    let out = tmp.path().join("t");
    vmi(&["topo", "--data", p(&d), "--mode", "raw", "--out", p(&out)]).unwrap();
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    let csvs = names.iter().filter(|n| n.ends_with(".csv")).count();
    let svgs = names.iter().filter(|n| n.ends_with(".svg")).count();
    assert_eq!((csvs, svgs), (4, 4), "{names:?}");
    assert!(names.contains(&"topo_0-1000ms.csv".to_string()));
}

#[test]
fn train_then_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "high", "4", "8");
    let model = tmp.path().join("m.json");
    vmi(&["train", "--data", p(&d), "--out", p(&model)]).unwrap();
    let pred = tmp.path().join("pred.csv");
    vmi(&["predict", "--data", p(&d), "--model", p(&model), "--out", p(&pred)]).unwrap();
    let text = fs::read_to_string(&pred).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 32);
    let hits = lines.iter().filter(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f[1] == f[2]
    });
    assert!(hits.count() >= 28);
}

#[test]
fn convert_exports_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    synth(&d, "low", "5", "1");
    let csv = tmp.path().join("e.csv");
    vmi(&["convert", "--data", p(&d), "--out", p(&csv)]).unwrap();
    assert!(fs::read_to_string(&csv).unwrap().starts_with("trial,label,channel,time_s,uV\n"));
    let json = tmp.path().join("e.json");
    vmi(&["convert", "--data", p(&d.join("recording.vhdr")), "--out", p(&json), "--layout", "json"]).unwrap();
    let es = vmi_core::io::import_epochs_json(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(es.n_trials(), 4);
}

#[test]
fn bad_arguments_and_config_fail() {
    assert!(vmi(&["synth", "--preset", "extreme", "--out", "x"]).is_err());
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "cv.fold = 3\n").unwrap();
    let err = format!("{:#}", vmi(&["synth", "--config", p(&cfg), "--out", p(&tmp.path().join("o"))]).unwrap_err());
    assert!(err.contains("unknown key") && err.contains("cv.fold"), "{err}");
}

#[test]
fn unwritable_output_reports_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let err = format!("{:#}", vmi(&["synth", "--trials-per-class", "1", "--out", p(&target)]).unwrap_err());
    assert!(err.starts_with("io: ") && err.contains("file/sub"), "{err}");
}
