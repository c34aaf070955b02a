//! Welch power spectral density, spectral summaries and magnitude-squared
//! coherence.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/L)`.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

/// Welch configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// Samples per segment.
    pub segment_length: usize,
    /// Fraction of a segment shared with the next, in [0, 1).
    pub overlap: f64,
    pub window: WindowKind,
    /// Hz
    pub fs: f64,
}

impl SpectralParams {
    /// 4-second Hann segments with 50% overlap.
    pub fn for_fs(fs: f64) -> Self {
        Self::with_segment_seconds(fs, 4.0)
    }

    pub fn with_segment_seconds(fs: f64, seconds: f64) -> Self {
        SpectralParams {
            segment_length: (seconds * fs).round() as usize,
            overlap: 0.5,
            window: WindowKind::Hann,
            fs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 8 {
            return Err(Error::InvalidConfig(format!("segment length {} < 8", self.segment_length)));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidConfig(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidConfig(format!("sampling frequency {}", self.fs)));
        }
        Ok(())
    }

    /// Hop between segment starts.
    pub fn step(&self) -> usize {
        let overlap = (self.overlap * self.segment_length as f64).floor() as usize;
        (self.segment_length - overlap).max(1)
    }

    pub fn n_segments(&self, len: usize) -> usize {
        if len < self.segment_length {
            0
        } else {
            (len - self.segment_length) / self.step() + 1
        }
    }

    /// One-sided bin count, `L/2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.segment_length / 2 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Hz, ascending from 0.
    pub frequencies: Vec<f64>,
    /// Power per Hz.
    pub power: Vec<f64>,
    /// Bin width in Hz.
    pub df: f64,
}

struct WelchPlan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_power: f64,
    params: SpectralParams,
}

impl WelchPlan {
    fn new(params: &SpectralParams) -> Result<Self> {
        params.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(params.segment_length);
        let window = params.window.coefficients(params.segment_length);
        let window_power = window.iter().map(|w| w * w).sum();
        Ok(WelchPlan { fft, window, window_power, params: *params })
    }

    /// Demeaned, windowed spectrum of the segment starting at `start`.
    fn segment_spectrum(&self, x: &[f64], start: usize, buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        let seg = &x[start..start + self.params.segment_length];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        buf.clear();
        buf.extend(seg.iter().zip(&self.window).map(|(&v, &w)| Complex64::new((v - mean) * w, 0.0)));
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex64::default());
        self.fft.process_with_scratch(buf, scratch);
    }

    /// Periodogram normalization with one-sided doubling for `bin`.
    fn bin_scale(&self, bin: usize) -> f64 {
        let l = self.params.segment_length;
        let base = 1.0 / (self.params.fs * self.window_power);
        let is_nyquist = l % 2 == 0 && bin == l / 2;
        if bin == 0 || is_nyquist {
            base
        } else {
            2.0 * base
        }
    }

    fn frequencies(&self) -> Vec<f64> {
        let l = self.params.segment_length as f64;
        (0..self.params.n_bins()).map(|k| k as f64 * self.params.fs / l).collect()
    }
}

/// Welch's averaged periodogram.
pub fn welch_psd(channel: &[f64], params: &SpectralParams) -> Result<PsdEstimate> {
    let plan = WelchPlan::new(params)?;
    if channel.len() < params.segment_length {
        return Err(Error::TooShort { min: params.segment_length, found: channel.len() });
    }
    let n_bins = params.n_bins();
    let n_segments = params.n_segments(channel.len());
    let mut power = vec![0.0; n_bins];
    let (mut buf, mut scratch) = (Vec::new(), Vec::new());
    for seg in 0..n_segments {
        plan.segment_spectrum(channel, seg * params.step(), &mut buf, &mut scratch);
        for (p, z) in power.iter_mut().zip(&buf) {
            *p += z.norm_sqr();
        }
    }
    for (k, p) in power.iter_mut().enumerate() {
        *p *= plan.bin_scale(k) / n_segments as f64;
    }
    Ok(PsdEstimate {
        frequencies: plan.frequencies(),
        power,
        df: params.fs / params.segment_length as f64,
    })
}

/// Frequency of the strongest non-DC bin; ties go to the lower frequency.
pub fn dominant_frequency(psd: &PsdEstimate) -> f64 {
    if psd.power.len() < 2 {
        return psd.frequencies.first().copied().unwrap_or(0.0);
    }
    let mut best = 1;
    for k in 2..psd.power.len() {
        if psd.power[k] > psd.power[best] {
            best = k;
        }
    }
    psd.frequencies[best]
}

/// Shannon entropy of the normalized spectrum divided by `ln(N_bins)`, in [0, 1].
pub fn spectral_entropy(psd: &PsdEstimate) -> f64 {
    let n = psd.power.len();
    let total: f64 = psd.power.iter().sum();
    if n < 2 || total <= 0.0 {
        return 0.0;
    }
    let h: f64 = psd
        .power
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    (h / (n as f64).ln()).clamp(0.0, 1.0)
}

/// Per-bin magnitude-squared coherence `|S_ab|² / (S_aa S_bb)` from Welch
/// cross and auto spectra. Bins with zero auto-power are `None`.
pub fn coherence_spectrum(a: &[f64], b: &[f64], params: &SpectralParams) -> Result<Vec<Option<f64>>> {
    let plan = WelchPlan::new(params)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let min = 2 * params.segment_length;
    if a.len() < min {
        return Err(Error::TooShort { min, found: a.len() });
    }
    let n_bins = params.n_bins();
    let mut s_ab = vec![Complex64::default(); n_bins];
    let mut s_aa = vec![0.0; n_bins];
    let mut s_bb = vec![0.0; n_bins];
    let (mut fa, mut fb, mut scratch) = (Vec::new(), Vec::new(), Vec::new());
    for seg in 0..params.n_segments(a.len()) {
        let start = seg * params.step();
        plan.segment_spectrum(a, start, &mut fa, &mut scratch);
        plan.segment_spectrum(b, start, &mut fb, &mut scratch);
        for k in 0..n_bins {
            s_ab[k] += fa[k].conj() * fb[k];
            s_aa[k] += fa[k].norm_sqr();
            s_bb[k] += fb[k].norm_sqr();
        }
    }
    Ok((0..n_bins)
        .map(|k| {
            let denom = s_aa[k] * s_bb[k];
            (denom > 0.0).then(|| (s_ab[k].norm_sqr() / denom).clamp(0.0, 1.0))
        })
        .collect())
}

/// Unweighted mean of the coherence spectrum over non-DC bins with nonzero
/// auto-power; 0 when no bin qualifies.
pub fn coherence(a: &[f64], b: &[f64], params: &SpectralParams) -> Result<f64> {
    let spectrum = coherence_spectrum(a, b, params)?;
    let (sum, count) = spectrum
        .iter()
        .skip(1)
        .flatten()
        .fold((0.0, 0usize), |(s, n), &c| (s + c, n + 1));
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}
