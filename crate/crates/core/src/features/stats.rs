use crate::{Error, Result};

/// Moments of one channel. `std` is the population standard deviation and
/// `excess_kurtosis` is zero for a normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub rms: f64,
}

impl TimeDomainStats {
    pub fn to_array(self) -> [f64; 5] {
        [self.mean, self.std, self.skewness, self.excess_kurtosis, self.rms]
    }
}

/// Constant input reports zero skewness and kurtosis.
pub fn time_domain_stats(channel: &[f64]) -> Result<TimeDomainStats> {
    if channel.len() < 2 {
        return Err(Error::TooShort { min: 2, found: channel.len() });
    }
    let first = channel[0];
    if channel.iter().all(|&v| v == first) {
        return Ok(TimeDomainStats { mean: first, std: 0.0, skewness: 0.0, excess_kurtosis: 0.0, rms: first.abs() });
    }
    let n = channel.len() as f64;
    let mean = channel.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for &v in channel {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sq += v * v;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(TimeDomainStats { mean, std: m2.sqrt(), skewness, excess_kurtosis, rms: (sq / n).sqrt() })
}
