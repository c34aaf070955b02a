//! ROC-AUC, per-class precision/recall/F1 and threshold alerting.
//!
//! Scores are P(true alarm); the true alarm is the positive class. Metrics
//! for the false-alarm class are computed by swapping the roles.

use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

/// Default alert threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Area under the ROC curve via the Mann–Whitney rank statistic, with
/// average ranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite score {bad}")));
    }
    let n_pos = labels.iter().filter(|l| l.is_true()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share their average
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k].is_true()).count();
        positive_rank_sum += avg_rank * tied_pos as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: u64,
    pub false_negative: u64,
    pub false_positive: u64,
    pub true_negative: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }

    /// Roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            true_positive: self.true_negative,
            false_negative: self.false_positive,
            false_positive: self.false_negative,
            true_negative: self.true_positive,
        }
    }
}

/// Precision, recall and F1 for one class. `precision_undefined` is set when
/// the class was never predicted (precision then reads 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub precision_undefined: bool,
}

impl ClassMetrics {
    fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let predicted = cm.true_positive + cm.false_positive;
        let support = cm.true_positive + cm.false_negative;
        let precision_undefined = predicted == 0;
        let precision = if precision_undefined { 0.0 } else { cm.true_positive as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { cm.true_positive as f64 / support as f64 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        ClassMetrics { precision, recall, f1, support, precision_undefined }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub roc_auc: f64,
    pub true_alarm: ClassMetrics,
    pub false_alarm: ClassMetrics,
    pub confusion_matrix: ConfusionMatrix,
    pub threshold: f64,
    pub n_samples: u64,
}

/// Counts predictions `score >= threshold` against the labels.
pub fn confusion_matrix(scores: &[f64], labels: &[Label], threshold: f64) -> Result<ConfusionMatrix> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let mut cm = ConfusionMatrix { true_positive: 0, false_negative: 0, false_positive: 0, true_negative: 0 };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_true()) {
            (true, true) => cm.true_positive += 1,
            (false, true) => cm.false_negative += 1,
            (true, false) => cm.false_positive += 1,
            (false, false) => cm.true_negative += 1,
        }
    }
    Ok(cm)
}

pub fn classification_metrics(scores: &[f64], labels: &[Label], threshold: f64) -> Result<EvalReport> {
    let roc_auc = roc_auc(scores, labels)?;
    let cm = confusion_matrix(scores, labels, threshold)?;
    Ok(EvalReport {
        roc_auc,
        true_alarm: ClassMetrics::from_confusion(&cm),
        false_alarm: ClassMetrics::from_confusion(&cm.swapped()),
        confusion_matrix: cm,
        threshold,
        n_samples: scores.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertDecision {
    pub score: f64,
    pub alert: bool,
    pub threshold: f64,
}

/// Alert when `score >= threshold`; the boundary itself alerts.
pub fn decide_alert(score: f64, threshold: f64) -> Result<AlertDecision> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(AlertDecision { score, alert: score >= threshold, threshold })
}
