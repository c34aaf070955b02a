use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Axis;
use vtalarm::features::{coherence, welch_psd, CwtPlan, FeatureConfig, SpectralParams, WaveletConfig};
use vtalarm::nn::{build_model, features_to_input, train, Dataset, ModelHyperparams};
use vtalarm::preprocess::impute_mean;
use vtalarm::synth::{generate_feature_dataset, generate_waveform_event, SynthConfig};
use vtalarm::wfdb::extract_alarm_window;
use vtalarm::{roc_auc, Architecture, Label, TrainConfig};

const FS: f64 = 100.0;

fn window() -> vtalarm::AlarmWindow {
    let config = SynthConfig { fs: FS, ..Default::default() };
    let (record, alarm) = generate_waveform_event(&config, 0, Label::TrueAlarm).unwrap();
    impute_mean(&extract_alarm_window(&record, alarm, Label::TrueAlarm).unwrap())
}

fn spectral(c: &mut Criterion) {
    let w = window();
    let ch0 = w.samples.column(0).to_vec();
    let ch1 = w.samples.column(1).to_vec();
    let params = SpectralParams::with_segment_seconds(FS, 4.0);
    c.bench_function("welch_psd 360s@100Hz", |b| b.iter(|| welch_psd(black_box(&ch0), &params).unwrap()));
    c.bench_function("coherence 360s@100Hz", |b| b.iter(|| coherence(black_box(&ch0), &ch1, &params).unwrap()));

    let wavelet = WaveletConfig::for_fs(FS);
    c.bench_function("cwt plan 24 scales", |b| b.iter(|| CwtPlan::new(&wavelet, ch0.len()).unwrap()));
    let plan = CwtPlan::new(&wavelet, ch0.len()).unwrap();
    c.bench_function("cwt energy 24 scales", |b| b.iter(|| plan.energy(black_box(&ch0)).unwrap()));
    let features = FeatureConfig::default();
    c.bench_function("feature vector 3ch", |b| b.iter(|| features.extract(black_box(&w)).unwrap()));
}

fn metrics(c: &mut Criterion) {
    let (x, y) = generate_feature_dataset(10_000, 2, 1.0, 0.3, 0).unwrap();
    let scores: Vec<f64> = x.column(0).to_vec();
    c.bench_function("roc_auc n=10000", |b| b.iter(|| roc_auc(black_box(&scores), &y).unwrap()));
}

fn training(c: &mut Criterion) {
    let (x, y) = generate_feature_dataset(320, 17, 2.0, 0.3, 0).unwrap();
    let ds = Dataset::new(features_to_input(&x), y).unwrap();
    let val = Dataset::new(features_to_input(&x.select(Axis(0), &(0..64).collect::<Vec<_>>())), ds.labels[..64].to_vec()).unwrap();
    let config = TrainConfig { max_epochs: 1, ..Default::default() };
    c.bench_function("fcnn epoch 320x17", |b| {
        b.iter_batched(
            || build_model(Architecture::Fcnn, (1, 17), &ModelHyperparams::default(), 0).unwrap(),
            |mut model| train(&mut model, &ds, &val, &config).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, spectral, metrics, training);
criterion_main!(benches);
