//! Continuous wavelet transform with the analytic Morlet wavelet.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Kernel support in units of scale: samples with |t| ≤ 4 are kept.
pub const KERNEL_HALF_WIDTH: f64 = 4.0;
pub const MIN_CWT_LENGTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    /// Morlet center frequency parameter ω0.
    pub omega0: f64,
    /// Scales in samples, strictly ascending.
    pub scales: Vec<f64>,
}

impl WaveletConfig {
    /// ω0 = 6 with 24 scales whose pseudo-frequencies span 40 Hz down to 0.5 Hz.
    pub fn for_fs(fs: f64) -> Self {
        Self::log_spaced(fs, 6.0, 24, 0.5, 40.0)
    }

    /// `n` scales log-spaced so that pseudo-frequencies `ω0·fs/(2πs)` run
    /// from `max_hz` (smallest scale) to `min_hz` (largest scale).
    pub fn log_spaced(fs: f64, omega0: f64, n: usize, min_hz: f64, max_hz: f64) -> Self {
        let (lo, hi) = (max_hz.ln(), min_hz.ln());
        let scales = (0..n)
            .map(|i| {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let f = (lo + frac * (hi - lo)).exp();
                scale_for_frequency(omega0, fs, f)
            })
            .collect();
        WaveletConfig { omega0, scales }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidConfig(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidConfig("no wavelet scales".into()));
        }
        if self.scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidConfig("wavelet scales must be positive".into()));
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("wavelet scales must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn pseudo_frequency(&self, scale: f64, fs: f64) -> f64 {
        self.omega0 * fs / (2.0 * PI * scale)
    }
}

/// Scale whose pseudo-frequency is `hz`.
pub fn scale_for_frequency(omega0: f64, fs: f64, hz: f64) -> f64 {
    omega0 * fs / (2.0 * PI * hz)
}

/// `ψ(t) = π^{-1/4} e^{iω0 t} e^{-t²/2}`
pub fn morlet(omega0: f64, t: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * t * t).exp();
    Complex64::from_polar(envelope, omega0 * t)
}

fn half_width(scale: f64) -> usize {
    (KERNEL_HALF_WIDTH * scale).floor() as usize
}

/// Correlation kernel at `scale`: entry `j + M` holds `conj(ψ(j/s))/√s` for
/// `j` in `-M..=M`, `M = ⌊4s⌋`.
pub fn morlet_kernel(omega0: f64, scale: f64) -> Vec<Complex64> {
    let m = half_width(scale) as isize;
    let norm = 1.0 / scale.sqrt();
    (-m..=m).map(|j| morlet(omega0, j as f64 / scale).conj() * norm).collect()
}

/// Coefficients `W[s, n] = Σ_j x[n + j] · conj(ψ(j/s)) / √s`, with zeros
/// outside the signal. Rows follow `config.scales`.
pub fn cwt_morlet(channel: &[f64], config: &WaveletConfig) -> Result<Array2<Complex64>> {
    CwtPlan::new(config, channel.len())?.transform(channel)
}

/// Smallest integer ≥ `n` with no prime factor above 5.
fn smooth_length(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("5-smooth numbers are unbounded")
}

/// FFT plans and kernel spectra for signals of one length, shared by
/// every channel of that length.
pub struct CwtPlan {
    n: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectra: Vec<Vec<Complex64>>,
}

impl CwtPlan {
    pub fn new(config: &WaveletConfig, n: usize) -> Result<Self> {
        config.validate()?;
        if n < MIN_CWT_LENGTH {
            return Err(Error::TooShort { min: MIN_CWT_LENGTH, found: n });
        }
        let max_m = config.scales.iter().map(|&s| half_width(s)).max().unwrap_or(0);
        let len = smooth_length((n + max_m).max(2 * max_m + 1));
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut scratch = vec![Complex64::default(); forward.get_inplace_scratch_len()];
        let kernel_spectra = config
            .scales
            .iter()
            .map(|&scale| {
                let kernel = morlet_kernel(config.omega0, scale);
                let m = half_width(scale) as isize;
                // reversed kernel h[i] = k[-i], stored circularly
                let mut buf = vec![Complex64::default(); len];
                for (idx, &k) in kernel.iter().enumerate() {
                    let j = idx as isize - m;
                    buf[(-j).rem_euclid(len as isize) as usize] = k;
                }
                forward.process_with_scratch(&mut buf, &mut scratch);
                buf
            })
            .collect();
        Ok(CwtPlan { n, len, forward, inverse, kernel_spectra })
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    /// Runs `visit(row, coefficients)` for each scale; `coefficients` has the
    /// signal's length.
    fn run(&self, channel: &[f64], mut visit: impl FnMut(usize, &[Complex64])) -> Result<()> {
        if channel.len() != self.n {
            return Err(Error::LengthMismatch(channel.len(), self.n));
        }
        let mut scratch =
            vec![Complex64::default(); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        let mut spectrum: Vec<Complex64> = channel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spectrum.resize(self.len, Complex64::default());
        self.forward.process_with_scratch(&mut spectrum, &mut scratch);
        let inv_len = 1.0 / self.len as f64;
        let mut buf = vec![Complex64::default(); self.len];
        for (row, kernel) in self.kernel_spectra.iter().enumerate() {
            for ((b, k), x) in buf.iter_mut().zip(kernel).zip(&spectrum) {
                *b = k * x * inv_len;
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            visit(row, &buf[..self.n]);
        }
        Ok(())
    }

    pub fn transform(&self, channel: &[f64]) -> Result<Array2<Complex64>> {
        let mut out = Array2::zeros((self.kernel_spectra.len(), self.n));
        self.run(channel, |row, coeffs| {
            for (dst, src) in out.row_mut(row).iter_mut().zip(coeffs) {
                *dst = *src;
            }
        })?;
        Ok(out)
    }

    /// [`wavelet_energy`] of the transform without storing it.
    pub fn energy(&self, channel: &[f64]) -> Result<WaveletEnergy> {
        let mut per_scale = vec![0.0; self.kernel_spectra.len()];
        let t = self.n as f64;
        self.run(channel, |row, coeffs| per_scale[row] = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / t)?;
        Ok(WaveletEnergy { total: per_scale.iter().sum(), per_scale })
    }
}

/// Mean squared magnitude along time for each scale, and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletEnergy {
    pub total: f64,
    pub per_scale: Vec<f64>,
}

pub fn wavelet_energy(coeffs: &Array2<Complex64>) -> WaveletEnergy {
    let t = coeffs.ncols().max(1) as f64;
    let per_scale: Vec<f64> = coeffs.rows().into_iter().map(|r| r.iter().map(|c| c.norm_sqr()).sum::<f64>() / t).collect();
    WaveletEnergy { total: per_scale.iter().sum(), per_scale }
}
