//! Per-channel time-domain, spectral and wavelet features, plus pairwise
//! coherence, concatenated into one [`FeatureVector`] per alarm window.
//!
//! Layout for C channels: for each channel in record order the eight values
//! `mean, std, skewness, excess_kurtosis, rms, dominant_freq_hz,
//! spectral_entropy, wavelet_energy`, followed by one mean coherence per
//! unordered channel pair in lexicographic order. D = 8C + C(C-1)/2.

pub mod spectral;
pub mod stats;
pub mod wavelet;

use ndarray::{s, Axis};
use serde::{Deserialize, Serialize};

use crate::wfdb::AlarmWindow;
use crate::{Error, Result};

pub use spectral::{
    coherence, coherence_spectrum, dominant_frequency, spectral_entropy, welch_psd, PsdEstimate, SpectralParams,
    WindowKind,
};
pub use stats::{time_domain_stats, TimeDomainStats};
pub use wavelet::{cwt_morlet, wavelet_energy, CwtPlan, WaveletConfig, WaveletEnergy};

pub const PER_CHANNEL_FEATURES: [&str; 8] = [
    "mean",
    "std",
    "skewness",
    "excess_kurtosis",
    "rms",
    "dominant_freq_hz",
    "spectral_entropy",
    "wavelet_energy",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How channel-pair coherence enters the vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceMode {
    /// One feature per unordered channel pair.
    #[default]
    PerPair,
    /// A single feature: the mean over all pairs.
    Global,
}

/// Span analysed by the extractor, in seconds relative to the alarm onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl AnalysisWindow {
    /// Full 360 s window: 300 s before onset to 60 s after.
    pub const FULL: AnalysisWindow = AnalysisWindow { start_s: -300.0, end_s: 60.0 };

    fn rows(&self, window: &AlarmWindow) -> Result<std::ops::Range<usize>> {
        let onset = window.alarm_index as f64;
        let start = onset + (self.start_s * window.fs).round();
        let end = onset + (self.end_s * window.fs).round();
        if start < 0.0 || end > window.n_samples() as f64 || start >= end {
            return Err(Error::InvalidConfig(format!(
                "analysis window {:?} does not fit a window of {} samples",
                self,
                window.n_samples()
            )));
        }
        Ok(start as usize..end as usize)
    }
}

/// Options beyond the Welch and wavelet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtractOptions {
    /// `None` analyses the whole window.
    pub analysis_window: Option<AnalysisWindow>,
    pub coherence: CoherenceMode,
}

/// Sampling-rate independent extractor settings; resolved against each
/// window's `fs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub segment_seconds: f64,
    pub overlap: f64,
    pub window: WindowKind,
    pub omega0: f64,
    pub n_scales: usize,
    pub min_hz: f64,
    pub max_hz: f64,
    pub analysis_window: Option<AnalysisWindow>,
    pub coherence: CoherenceMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            segment_seconds: 4.0,
            overlap: 0.5,
            window: WindowKind::Hann,
            omega0: 6.0,
            n_scales: 24,
            min_hz: 0.5,
            max_hz: 40.0,
            analysis_window: None,
            coherence: CoherenceMode::PerPair,
        }
    }
}

impl FeatureConfig {
    pub fn spectral(&self, fs: f64) -> SpectralParams {
        SpectralParams { overlap: self.overlap, window: self.window, ..SpectralParams::with_segment_seconds(fs, self.segment_seconds) }
    }

    pub fn wavelet(&self, fs: f64) -> WaveletConfig {
        WaveletConfig::log_spaced(fs, self.omega0, self.n_scales, self.min_hz, self.max_hz)
    }

    pub fn options(&self) -> ExtractOptions {
        ExtractOptions { analysis_window: self.analysis_window, coherence: self.coherence }
    }

    pub fn extract(&self, window: &AlarmWindow) -> Result<FeatureVector> {
        build_feature_vector_with(window, &self.spectral(window.fs), &self.wavelet(window.fs), &self.options())
    }

    /// Rows analysed in a window of `n_samples` rows at `fs`.
    pub fn span_len(&self, fs: f64, n_samples: usize) -> usize {
        match self.analysis_window {
            Some(aw) => ((aw.end_s * fs).round() - (aw.start_s * fs).round()).max(0.0) as usize,
            None => n_samples,
        }
    }

    /// An extractor for windows sampled at `fs` whose analysed span has
    /// `span_len` rows. Its wavelet plan is built once and reused.
    pub fn extractor(&self, fs: f64, span_len: usize) -> Result<FeatureExtractor> {
        Ok(FeatureExtractor {
            fs,
            spectral: self.spectral(fs),
            wavelet: self.wavelet(fs),
            options: self.options(),
            plan: CwtPlan::new(&self.wavelet(fs), span_len)?,
        })
    }
}

pub struct FeatureExtractor {
    fs: f64,
    spectral: SpectralParams,
    wavelet: WaveletConfig,
    options: ExtractOptions,
    plan: CwtPlan,
}

impl FeatureExtractor {
    /// Same result as [`FeatureConfig::extract`]. Windows at another rate or
    /// span length get a fresh plan.
    pub fn extract(&self, window: &AlarmWindow) -> Result<FeatureVector> {
        if window.fs != self.fs {
            return Err(Error::InvalidInput(format!(
                "extractor built for {} Hz, window {} is sampled at {} Hz",
                self.fs, window.record_id, window.fs
            )));
        }
        extract(window, &self.spectral, &self.wavelet, Some(&self.plan), &self.options)
    }
}

/// Feature names for `n_channels` channels under `mode`.
pub fn feature_names(n_channels: usize, mode: CoherenceMode) -> Vec<String> {
    let mut names = Vec::new();
    for c in 0..n_channels {
        names.extend(PER_CHANNEL_FEATURES.iter().map(|f| format!("ch{c}_{f}")));
    }
    match mode {
        CoherenceMode::PerPair => {
            for a in 0..n_channels {
                for b in a + 1..n_channels {
                    names.push(format!("coh_ch{a}_ch{b}"));
                }
            }
        }
        CoherenceMode::Global => {
            if n_channels >= 2 {
                names.push("coh_mean".to_string());
            }
        }
    }
    names
}

/// Features of an imputed window over its full span, per-pair coherence.
pub fn build_feature_vector(window: &AlarmWindow, spectral: &SpectralParams, wavelet: &WaveletConfig) -> Result<FeatureVector> {
    build_feature_vector_with(window, spectral, wavelet, &ExtractOptions::default())
}

pub fn build_feature_vector_with(
    window: &AlarmWindow,
    spectral: &SpectralParams,
    wavelet: &WaveletConfig,
    options: &ExtractOptions,
) -> Result<FeatureVector> {
    extract(window, spectral, wavelet, None, options)
}

fn extract(
    window: &AlarmWindow,
    spectral: &SpectralParams,
    wavelet: &WaveletConfig,
    plan: Option<&CwtPlan>,
    options: &ExtractOptions,
) -> Result<FeatureVector> {
    if window.has_missing() {
        return Err(Error::InvalidInput(format!(
            "window {} still has missing samples; impute before extracting features",
            window.record_id
        )));
    }
    let rows = match options.analysis_window {
        Some(aw) => aw.rows(window)?,
        None => 0..window.n_samples(),
    };
    let span = window.samples.slice(s![rows, ..]);
    let channels: Vec<Vec<f64>> = span.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();

    let fresh;
    let plan = match plan {
        Some(p) if p.signal_len() == span.nrows() => p,
        _ => {
            fresh = CwtPlan::new(wavelet, span.nrows())?;
            &fresh
        }
    };
    let mut values = Vec::new();
    for channel in &channels {
        values.extend(time_domain_stats(channel)?.to_array());
        let psd = welch_psd(channel, spectral)?;
        values.push(dominant_frequency(&psd));
        values.push(spectral_entropy(&psd));
        values.push(plan.energy(channel)?.total);
    }
    let mut pair_values = Vec::new();
    for a in 0..channels.len() {
        for b in a + 1..channels.len() {
            pair_values.push(coherence(&channels[a], &channels[b], spectral)?);
        }
    }
    match options.coherence {
        CoherenceMode::PerPair => values.extend(pair_values),
        CoherenceMode::Global => {
            if !pair_values.is_empty() {
                values.push(pair_values.iter().sum::<f64>() / pair_values.len() as f64);
            }
        }
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite feature {i} in window {}", window.record_id)));
    }
    let names = feature_names(channels.len(), options.coherence);
    debug_assert_eq!(names.len(), values.len());
    Ok(FeatureVector { values, names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label;
    use ndarray::Array2;

    fn window(n_channels: usize, fs: f64, seconds: f64) -> AlarmWindow {
        let n = (fs * seconds) as usize;
        let samples = Array2::from_shape_fn((n, n_channels), |(t, c)| {
            let time = t as f64 / fs;
            (2.0 * std::f64::consts::PI * (1.0 + c as f64) * time).sin() + 0.1 * ((t * 7 + c * 3) % 11) as f64
        });
        AlarmWindow {
            record_id: "w".into(),
            fs,
            channel_names: (0..n_channels).map(|c| format!("ch{c}")).collect(),
            samples,
            missing_mask: Array2::from_elem((n, n_channels), false),
            label: Label::FalseAlarm,
            alarm_index: n / 2,
        }
    }

    #[test]
    fn dimension_arithmetic() {
        assert_eq!(feature_names(2, CoherenceMode::PerPair).len(), 17);
        assert_eq!(feature_names(4, CoherenceMode::PerPair).len(), 38);
        assert_eq!(feature_names(4, CoherenceMode::Global).len(), 33);
        assert_eq!(feature_names(2, CoherenceMode::PerPair)[16], "coh_ch0_ch1");
    }

    #[test]
    fn extracts_two_channel_vector() {
        let w = window(2, 20.0, 36.0);
        let config = FeatureConfig::default();
        let v = config.extract(&w).unwrap();
        assert_eq!(v.len(), 17);
        assert_eq!(v.names, feature_names(2, CoherenceMode::PerPair));
        assert_eq!(config.extract(&w).unwrap(), v);
        let extractor = config.extractor(20.0, config.span_len(20.0, w.n_samples())).unwrap();
        assert_eq!(extractor.extract(&w).unwrap(), v);
        let shorter = window(2, 20.0, 30.0);
        assert_eq!(extractor.extract(&shorter).unwrap(), config.extract(&shorter).unwrap());
        assert!(extractor.extract(&window(2, 25.0, 36.0)).is_err());
        // channel 1 carries a 2 Hz sine
        assert!((v.values[8 + 5] - 2.0).abs() < 0.3);
    }

    #[test]
    fn rejects_unimputed_window() {
        let mut w = window(2, 20.0, 36.0);
        w.missing_mask[[3, 1]] = true;
        assert!(matches!(FeatureConfig::default().extract(&w), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn analysis_window_bounds() {
        let w = window(2, 20.0, 36.0);
        let mut config = FeatureConfig::default();
        config.analysis_window = Some(AnalysisWindow { start_s: 0.0, end_s: 12.0 });
        assert_eq!(config.extract(&w).unwrap().len(), 17);
        config.analysis_window = Some(AnalysisWindow { start_s: 0.0, end_s: 600.0 });
        assert!(matches!(config.extract(&w), Err(Error::InvalidConfig(_))));
    }
}
