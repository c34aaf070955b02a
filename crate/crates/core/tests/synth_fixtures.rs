use ndarray::{s, Array1};
use vtalarm::eval::roc_auc;
use vtalarm::features::{dominant_frequency, welch_psd, SpectralParams};
use vtalarm::synth::{corpus_labels, generate_feature_dataset, generate_waveform_event, SynthConfig};
use vtalarm::wfdb::extract_alarm_window;
use vtalarm::Label;

/// Standard normal CDF by Simpson integration of the density.
fn phi(z: f64) -> f64 {
    let (a, n) = (-12.0, 200_000);
    let h = (z - a) / n as f64;
    let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = f(a) + f(z);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn feature_dataset_reaches_bayes_auc() {
    let (x, y) = generate_feature_dataset(20_000, 5, 4.0, 0.3, 11).unwrap();
    let n_true = y.iter().filter(|l| l.is_true()).count();
    assert_eq!(n_true, 6000);
    let mean = |want: bool| -> Array1<f64> {
        let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_true() == want).collect();
        x.select(ndarray::Axis(0), &idx).mean_axis(ndarray::Axis(0)).unwrap()
    };
    let (mu1, mu0) = (mean(true), mean(false));
    let gap = &mu1 - &mu0;
    assert!((gap.dot(&gap).sqrt() - 4.0).abs() < 0.1);
    let scores: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&gap)).collect();
    let auc = roc_auc(&scores, &y).unwrap();
    let bayes = phi(4.0 / 2f64.sqrt());
    assert!((bayes - 0.99766).abs() < 1e-5);
    assert!((auc - bayes).abs() < 0.003, "auc {auc} vs {bayes}");
}

#[test]
fn dominant_frequency_separates_events() {
    let config = SynthConfig { n_events: 200, fs: 100.0, separability: 2.0, seed: 12, ..Default::default() };
    let labels = corpus_labels(&config).unwrap();
    let params = SpectralParams::with_segment_seconds(config.fs, 8.0);
    let mut correct = 0;
    for (i, &label) in labels.iter().enumerate() {
        let (record, alarm) = generate_waveform_event(&config, i, label).unwrap();
        let window = extract_alarm_window(&record, alarm, label).unwrap();
        let post: Vec<f64> = window.samples.slice(s![window.alarm_index.., 0]).to_vec();
        let f = dominant_frequency(&welch_psd(&post, &params).unwrap());
        if (f > 2.0) == label.is_true() {
            correct += 1;
        }
    }
    assert!(correct >= 190, "{correct}/200");
}

#[test]
fn zero_separability_gives_identical_events() {
    let config = SynthConfig { n_events: 20, fs: 50.0, separability: 0.0, seed: 13, ..Default::default() };
    for i in 0..3 {
        let (a, ta) = generate_waveform_event(&config, i, Label::TrueAlarm).unwrap();
        let (b, tb) = generate_waveform_event(&config, i, Label::FalseAlarm).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }
}

#[test]
fn corpus_is_seeded() {
    let config = SynthConfig { n_events: 50, seed: 14, ..Default::default() };
    let a = corpus_labels(&config).unwrap();
    assert_eq!(a, corpus_labels(&config).unwrap());
    assert_eq!(a.iter().filter(|l| l.is_true()).count(), (50.0f64 * config.class_ratio).round() as usize);
    assert_ne!(a, corpus_labels(&SynthConfig { seed: 15, ..config }).unwrap());
}
