use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use vmi_bench::{alpha_set, covariances, oz_tones, session, spd};
use vmi_core::classify::{cross_validate_cached, train_ovr, CvMode};
use vmi_core::csp::{fit_csp, TrialCovariances};
use vmi_core::dsp::{apply_zero_phase, design_butterworth_bandpass, filter_recording};
use vmi_core::io::{parse_header, parse_markers, read_recording, write_recording, MarkerMap, WriteOptions};
use vmi_core::synth::{generate_session, SnrPreset, SynthConfig};
use vmi_core::timefreq::compute_ersp;
use vmi_core::{default_montage, AnalysisConfig, SessionKind};

fn filtering(c: &mut Criterion) {
    let f = design_butterworth_bandpass(3, 8.0, 13.0, 1000.0).unwrap();
    c.bench_function("design_bandpass", |b| b.iter(|| design_butterworth_bandpass(3, black_box(8.0), 13.0, 1000.0)));
    let x: Vec<f64> = (0..60_000).map(|i| (i as f64 * 0.0627).sin() + (i as f64 * 0.31).cos()).collect();
    c.bench_function("zero_phase_60k", |b| b.iter(|| apply_zero_phase(&f, black_box(&x)).unwrap()));
    let rec = session(2);
    c.bench_function("filter_recording_8_trials", |b| b.iter(|| filter_recording(black_box(&rec), &f).unwrap()));
}

fn spatial(c: &mut Criterion) {
    for d in [16, 64] {
        let (a, r) = (spd(d, 1), spd(d, 2));
        c.bench_function(&format!("fit_csp_{d}"), |b| b.iter(|| fit_csp(black_box(&a), &r, 3).unwrap()));
    }
    let es = alpha_set(5);
    c.bench_function("trial_covariances_20", |b| b.iter(|| TrialCovariances::from_epochs(black_box(&es))));
    c.bench_function("train_ovr_20", |b| b.iter(|| train_ovr(black_box(&es), &AnalysisConfig::default()).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let (cache, labels) = covariances(10);
    let mut cfg = AnalysisConfig::default();
    cfg.cv.repeats = 1;
    cfg.cv.folds = 5;
    let mut g = c.benchmark_group("cv");
    g.sample_size(10);
    g.bench_function("four_class_40_trials", |b| {
        b.iter(|| cross_validate_cached(&cache, &labels, &cfg, CvMode::FourClass).unwrap())
    });
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let cfg = AnalysisConfig::default();
    let es = oz_tones(4, (0.0, 5.0));
    let bs = oz_tones(4, (-0.5, 0.0));
    let mut g = c.benchmark_group("timefreq");
    g.sample_size(10);
    g.bench_function("ersp_4_trials", |b| b.iter(|| compute_ersp(black_box(&es), &bs, "Oz", &cfg).unwrap()));
    g.finish();
}

fn io_and_synth(c: &mut Criterion) {
    let rec = session(1);
    let text = write_recording(&rec, &WriteOptions::default()).unwrap();
    let montage = default_montage();
    let map = MarkerMap::default();
    c.bench_function("parse_header", |b| b.iter(|| parse_header(black_box(&text.header)).unwrap()));
    c.bench_function("read_recording_4_trials", |b| {
        b.iter(|| {
            let h = parse_header(&text.header).unwrap();
            let m = parse_markers(&text.markers).unwrap();
            read_recording(&h, &m, black_box(&text.binary), &montage, &map).unwrap()
        })
    });
    let mut g = c.benchmark_group("synth");
    g.sample_size(10);
    g.bench_function("session_4_trials", |b| {
        b.iter_batched(
            || {
                let mut cfg = SynthConfig::preset(SnrPreset::High, SessionKind::Imagery, 3);
                cfg.n_trials_per_class = 1;
                cfg
            },
            |cfg| generate_session(&cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, filtering, spatial, evaluation, analysis, io_and_synth);
criterion_main!(benches);
