//! Mini-batch training with early stopping on validation ROC-AUC.

use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::weighted_bce;
use super::model::{ModelGraph, Mode};
use crate::eval::roc_auc;
use crate::imbalance::ClassWeights;
use crate::rng::{self, Stream};
use crate::{Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dropout_p: f64,
    /// Epochs without a validation AUC improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub class_weights: Option<ClassWeights>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            dropout_p: 0.3,
            patience: 10,
            seed: 0,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidHyperparams(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidHyperparams(format!("batch size {} must be at least 2", self.batch_size)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidHyperparams("max_epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidHyperparams(format!("dropout p {} outside [0, 1)", self.dropout_p)));
        }
        if let Some(w) = self.class_weights {
            if !(w.weight_true > 0.0 && w.weight_false > 0.0) {
                return Err(Error::InvalidHyperparams("class weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Model inputs with one label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array3<f64>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(inputs: Array3<f64>, labels: Vec<Label>) -> Result<Self> {
        if inputs.dim().0 != labels.len() {
            return Err(Error::LengthMismatch(inputs.dim().0, labels.len()));
        }
        Ok(Dataset { inputs: inputs.as_standard_layout().into_owned(), labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn gather(&self, idx: &[usize]) -> (Array3<f64>, Vec<f64>, Vec<Label>) {
        let x = self.inputs.select(Axis(0), idx);
        let labels: Vec<Label> = idx.iter().map(|&i| self.labels[i]).collect();
        let y = labels.iter().map(|l| l.target()).collect();
        (x, y, labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_auc: f64,
}

impl TrainHistory {
    /// `epoch,train_loss,val_auc` rows, with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_auc\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{:.10},{:.10}\n", r.epoch, r.train_loss, r.val_auc));
        }
        out
    }
}

/// Batches of `batch_size` over `order`; a trailing batch of one sample is
/// merged into the one before it.
pub fn batches(order: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(batch_size).collect();
    if out.len() >= 2 && out.last().map(|b| b.len()) == Some(1) {
        out.pop();
        let merged_start = (out.len() - 1) * batch_size;
        *out.last_mut().unwrap() = &order[merged_start..];
    }
    out
}

/// Trains `model` in place. The returned history has one record per epoch
/// run; on return the model holds the parameters of the best validation
/// epoch and is in inference mode.
pub fn train(model: &mut ModelGraph, train_set: &Dataset, val_set: &Dataset, config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let has_both = |labels: &[Label]| labels.iter().any(|l| l.is_true()) && labels.iter().any(|l| !l.is_true());
    if !has_both(&train_set.labels) || !has_both(&val_set.labels) {
        return Err(Error::SingleClass);
    }
    if train_set.len() < 2 {
        return Err(Error::BatchTooSmall(train_set.len()));
    }
    model.set_dropout(config.dropout_p)?;
    model.set_dropout_rng(config.seed);
    model.optimizer = None;

    let mut history = TrainHistory { best_val_auc: f64::NEG_INFINITY, ..Default::default() };
    let mut best_state = model.state_tensors();
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        model.set_mode(Mode::Train);
        let mut shuffle = rng::indexed_stream(config.seed, Stream::Shuffle, epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut shuffle);

        let mut loss_sum = 0.0;
        for batch in batches(&order, config.batch_size) {
            let (x, y, labels) = train_set.gather(batch);
            let w: Vec<f64> = match config.class_weights {
                Some(cw) => labels.iter().map(|&l| cw.weight(l)).collect(),
                None => vec![1.0; labels.len()],
            };
            let logits = model.forward_train(&x)?;
            let (loss, grad) = weighted_bce(&logits, &y, &w)?;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch, loss });
            }
            model.backward(&grad)?;
            model.apply_gradients(config.learning_rate)?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::DivergedLoss { epoch, loss: train_loss });
        }

        model.set_mode(Mode::Infer);
        let scores = model.predict(&val_set.inputs)?;
        let val_auc = roc_auc(&scores, &val_set.labels)?;
        history.epochs.push(EpochRecord { epoch, train_loss, val_auc });
        if val_auc > history.best_val_auc {
            history.best_val_auc = val_auc;
            history.best_epoch = epoch;
            best_state = model.state_tensors();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    model.load_state_tensors(&best_state)?;
    model.set_mode(Mode::Infer);
    Ok(history)
}
