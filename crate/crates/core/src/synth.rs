//! Deterministic synthetic alarms and feature datasets.
//!
//! The waveform generator is a test surrogate, not a physiological model:
//! two ECG-like leads built from harmonics of a base heart rate plus one
//! pulsatile pressure channel. True alarms add a fast oscillation burst
//! from the alarm onset onward, with amplitude equal to `separability`, and
//! damp the pressure pulse. With `separability = 0` both classes are drawn
//! from the same distribution.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{self, ChaCha8Rng, Stream};
use crate::wfdb::{RecordHeader, SignalSpec, WaveformRecord, PRE_ALARM_SECONDS};
use crate::{Error, Label, Result};

pub const MIN_SYNTH_FS: f64 = 50.0;
pub const RECORD_SECONDS: f64 = 400.0;
/// Onsets fall uniformly in `[300, 340]` s so the 60 s tail always fits.
pub const MAX_ONSET_JITTER_S: f64 = 40.0;
pub const ECG_GAIN: f64 = 200.0;
pub const ABP_GAIN: f64 = 10.0;
pub const ECG_NOISE_SD: f64 = 0.05;
pub const ABP_NOISE_SD: f64 = 0.5;

const HARMONICS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
const BASE_RATE_BPM: (f64, f64) = (60.0, 100.0);
const BURST_RATE_BPM: (f64, f64) = (150.0, 220.0);
const ABP_MEAN: f64 = 90.0;
const ABP_PULSE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_events: usize,
    /// Fraction of true alarms, in (0, 1).
    pub class_ratio: f64,
    pub fs: f64,
    pub separability: f64,
    pub seed: u64,
    /// Height of the impulse added to channel 0 at the onset sample.
    pub marker_amplitude: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n_events: 100, class_ratio: 0.286, fs: 250.0, separability: 2.0, seed: 0, marker_amplitude: 1.0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs >= MIN_SYNTH_FS) {
            return Err(Error::InvalidConfig(format!("fs must be at least {MIN_SYNTH_FS} Hz, got {}", self.fs)));
        }
        if !(self.class_ratio > 0.0 && self.class_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("class_ratio {} outside (0, 1)", self.class_ratio)));
        }
        if !(self.separability.is_finite() && self.separability >= 0.0) {
            return Err(Error::InvalidConfig(format!("separability {} must be non-negative", self.separability)));
        }
        if !self.marker_amplitude.is_finite() {
            return Err(Error::InvalidConfig("marker amplitude must be finite".into()));
        }
        if self.n_events == 0 {
            return Err(Error::InvalidConfig("n_events must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of true alarms in a corpus: `round(n_events · class_ratio)`.
    pub fn n_true(&self) -> usize {
        (self.n_events as f64 * self.class_ratio).round() as usize
    }
}

/// A generated record with its alarm.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEvent {
    pub record: WaveformRecord,
    pub alarm_time: f64,
    pub label: Label,
}

pub fn record_name(index: usize) -> String {
    format!("synth{index:05}")
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Event `index` of the corpus described by `config`, with the given label.
/// Every random draw is made in the same order for both labels.
pub fn generate_waveform_event(config: &SynthConfig, index: usize, label: Label) -> Result<(WaveformRecord, f64)> {
    config.validate()?;
    let fs = config.fs;
    let mut rng = rng::indexed_stream(config.seed, Stream::SynthEvent, index as u64);
    let n = (RECORD_SECONDS * fs).round() as usize;
    let onset = ((PRE_ALARM_SECONDS + MAX_ONSET_JITTER_S * rng.random::<f64>()) * fs).round() as usize;
    let alarm_time = onset as f64 / fs;
    let f0 = uniform(&mut rng, BASE_RATE_BPM) / 60.0;
    let f_burst = uniform(&mut rng, BURST_RATE_BPM) / 60.0;
    let lead_gain = [uniform(&mut rng, (0.8, 1.2)), uniform(&mut rng, (0.8, 1.2))];
    let mut phases = [[0.0; 4]; 2];
    for lead in &mut phases {
        for p in lead.iter_mut() {
            *p = 2.0 * PI * rng.random::<f64>();
        }
    }
    let burst_phase = [2.0 * PI * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>()];
    let abp_phase = 2.0 * PI * rng.random::<f64>();

    let burst = if label.is_true() { config.separability } else { 0.0 };
    let pulse_damping = 1.0 / (1.0 + burst);
    let ecg_noise = Normal::new(0.0, ECG_NOISE_SD).expect("valid sd");
    let abp_noise = Normal::new(0.0, ABP_NOISE_SD).expect("valid sd");

    let mut samples = Array2::zeros((n, 3));
    for i in 0..n {
        let t = i as f64 / fs;
        let after = i >= onset;
        for lead in 0..2 {
            let mut v = 0.0;
            for (h, amp) in HARMONICS.iter().enumerate() {
                v += amp * (2.0 * PI * (h + 1) as f64 * f0 * t + phases[lead][h]).sin();
            }
            v *= lead_gain[lead];
            if after {
                v += burst * (2.0 * PI * f_burst * (t - alarm_time) + burst_phase[lead]).sin();
            }
            samples[[i, lead]] = v + ecg_noise.sample(&mut rng);
        }
        let pulse = ABP_PULSE * (2.0 * PI * f0 * t + abp_phase).sin() * if after { pulse_damping } else { 1.0 };
        samples[[i, 2]] = ABP_MEAN + pulse + abp_noise.sample(&mut rng);
    }
    samples[[onset, 0]] += config.marker_amplitude;

    let name = record_name(index);
    let file = format!("{name}.dat");
    let header = RecordHeader {
        record_name: name,
        n_signals: 3,
        sampling_frequency: fs,
        n_samples: n,
        signals: vec![
            SignalSpec::new(file.clone(), ECG_GAIN, "mV", "II"),
            SignalSpec::new(file.clone(), ECG_GAIN, "mV", "V"),
            SignalSpec::new(file, ABP_GAIN, "mmHg", "ABP"),
        ],
    };
    let record = WaveformRecord::new(header, samples, Array2::from_elem((n, 3), false))?;
    Ok((record, alarm_time))
}

/// Labels for a corpus: exactly `round(n·ratio)` true alarms in a seeded
/// random order.
pub fn corpus_labels(config: &SynthConfig) -> Result<Vec<Label>> {
    config.validate()?;
    shuffled_labels(config.n_events, config.n_true(), &mut rng::stream(config.seed, Stream::SynthEvent))
}

fn shuffled_labels(n: usize, n_true: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Label>> {
    if n_true == 0 || n_true >= n {
        return Err(Error::InvalidConfig(format!("{n_true} true alarms out of {n} leaves a class empty")));
    }
    let mut labels = vec![Label::TrueAlarm; n_true];
    labels.resize(n, Label::FalseAlarm);
    labels.shuffle(rng);
    Ok(labels)
}

pub fn generate_corpus(config: &SynthConfig) -> Result<Vec<SynthEvent>> {
    let labels = corpus_labels(config)?;
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let (record, alarm_time) = generate_waveform_event(config, i, label)?;
            Ok(SynthEvent { record, alarm_time, label })
        })
        .collect()
}

pub const MIN_DATASET_ROWS: usize = 20;
pub const MIN_DATASET_DIM: usize = 2;

/// Two unit-covariance Gaussian classes whose means sit at `±separability/2`
/// along a random unit direction. Exactly `round(n·class_ratio)` rows are
/// true alarms; rows come in random order.
pub fn generate_feature_dataset(n: usize, d: usize, separability: f64, class_ratio: f64, seed: u64) -> Result<(Array2<f64>, Vec<Label>)> {
    if n < MIN_DATASET_ROWS || d < MIN_DATASET_DIM {
        return Err(Error::InvalidConfig(format!(
            "need n >= {MIN_DATASET_ROWS} and d >= {MIN_DATASET_DIM}, got n={n}, d={d}"
        )));
    }
    if !(class_ratio > 0.0 && class_ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("class_ratio {class_ratio} outside (0, 1)")));
    }
    if !(separability.is_finite() && separability >= 0.0) {
        return Err(Error::InvalidConfig(format!("separability {separability} must be non-negative")));
    }
    let mut rng = rng::stream(seed, Stream::SynthFeatures);
    let mut direction: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);

    let labels = shuffled_labels(n, (n as f64 * class_ratio).round() as usize, &mut rng)?;
    let mut x = Array2::zeros((n, d));
    for (mut row, label) in x.rows_mut().into_iter().zip(&labels) {
        let shift = if label.is_true() { separability / 2.0 } else { -separability / 2.0 };
        for (v, u) in row.iter_mut().zip(&direction) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = z + shift * u;
        }
    }
    Ok((x, labels))
}
