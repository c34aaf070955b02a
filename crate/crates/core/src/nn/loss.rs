//! Sigmoid output and class-weighted binary cross-entropy.

use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the log.
pub const PROB_CLAMP: f64 = 1e-7;

/// `1/(1+e^{-z})` without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted BCE on logits.
///
/// `loss = -(1/Σw) Σ w_i [y_i ln p_i + (1-y_i) ln(1-p_i)]` and the returned
/// gradient w.r.t. each logit is `w_i (p_i - y_i) / Σw`.
pub fn weighted_bce(logits: &[f64], targets: &[f64], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::LengthMismatch(logits.len(), targets.len()));
    }
    if logits.len() != weights.len() {
        return Err(Error::LengthMismatch(logits.len(), weights.len()));
    }
    if logits.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&y) = targets.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::LabelOutOfRange(y));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("sample weights must be non-negative with a positive sum".into()));
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for ((&z, &y), &w) in logits.iter().zip(targets).zip(weights) {
        let p = sigmoid(z);
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= w * (y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
        grad.push(w * (p - y) / total);
    }
    Ok((loss / total, grad))
}
