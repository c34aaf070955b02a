use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::attention::MultiHeadAttention;
use super::layers::{BatchNorm, Conv1d, Dense, Dropout, GlobalAvgPool, Layer, MaxPool1d, Param, Relu};
use super::loss::sigmoid;
use super::optim::Adam;
use crate::rng::{self, ChaCha8Rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Conv1D + attention over raw (decimated) waveforms.
    #[serde(alias = "cnn")]
    Cnn1dAttention,
    /// Dense stack over feature vectors.
    Fcnn,
}

impl Architecture {
    pub fn tag(&self) -> &'static str {
        match self {
            Architecture::Cnn1dAttention => "cnn1d-attention",
            Architecture::Fcnn => "fcnn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" | "cnn1d-attention" => Ok(Architecture::Cnn1dAttention),
            "fcnn" => Ok(Architecture::Fcnn),
            other => Err(Error::InvalidInput(format!("unknown architecture {other:?} (expected cnn or fcnn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Dense widths after the convolutional block.
pub const CNN_HIDDEN: [usize; 2] = [256, 128];
/// Hidden widths of the fully connected network.
pub const FCNN_HIDDEN: [usize; 4] = [256, 192, 128, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelHyperparams {
    pub n_filters: usize,
    pub filter_size: usize,
    pub stride: usize,
    pub n_heads: usize,
    pub dropout_p: f64,
}

impl Default for ModelHyperparams {
    fn default() -> Self {
        ModelHyperparams { n_filters: 32, filter_size: 7, stride: 1, n_heads: 4, dropout_p: 0.3 }
    }
}

/// Ordered layer stack ending in a single logit, plus optimizer state.
pub struct ModelGraph {
    pub architecture: Architecture,
    pub hyperparams: ModelHyperparams,
    /// `(T, F)` of one sample; `(1, D)` for feature vectors.
    pub input_shape: (usize, usize),
    pub layers: Vec<Box<dyn Layer>>,
    pub mode: Mode,
    pub optimizer: Option<Adam>,
    pub(crate) dropout_rng: ChaCha8Rng,
}

impl fmt::Debug for ModelGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelGraph")
            .field("architecture", &self.architecture)
            .field("input_shape", &self.input_shape)
            .field("layers", &self.layers.iter().map(|l| l.name()).collect::<Vec<_>>())
            .field("mode", &self.mode)
            .finish()
    }
}

/// Builds either stack with He-initialized weights drawn from `seed`.
///
/// `input_shape` is `(T, C)` for the CNN and `(1, D)` for the FCNN.
pub fn build_model(architecture: Architecture, input_shape: (usize, usize), hyperparams: &ModelHyperparams, seed: u64) -> Result<ModelGraph> {
    let mut rng = rng::stream(seed, Stream::Init);
    let p = hyperparams.dropout_p;
    let (t, f) = input_shape;
    if t == 0 || f == 0 {
        return Err(Error::InvalidHyperparams(format!("input shape {input_shape:?} is empty")));
    }
    let mut layers: Vec<Box<dyn Layer>> = Vec::new();
    match architecture {
        Architecture::Cnn1dAttention => {
            let k = hyperparams.n_filters;
            layers.push(Box::new(Conv1d::new(f, k, hyperparams.filter_size, hyperparams.stride, &mut rng)?));
            layers.push(Box::new(BatchNorm::new(k)));
            layers.push(Box::new(Relu::new()));
            layers.push(Box::new(MaxPool1d::new()));
            layers.push(Box::new(MultiHeadAttention::new(k, hyperparams.n_heads, &mut rng)?));
            layers.push(Box::new(GlobalAvgPool::new()));
            let mut width = k;
            for &h in &CNN_HIDDEN {
                layers.push(Box::new(Dense::new(width, h, &mut rng)));
                layers.push(Box::new(Relu::new()));
                layers.push(Box::new(Dropout::new(p)?));
                width = h;
            }
            layers.push(Box::new(Dense::new(width, 1, &mut rng)));
        }
        Architecture::Fcnn => {
            if t != 1 {
                return Err(Error::InvalidHyperparams(format!("fcnn input must be (1, D), got {input_shape:?}")));
            }
            let mut width = f;
            for &h in &FCNN_HIDDEN {
                layers.push(Box::new(Dense::new(width, h, &mut rng)));
                layers.push(Box::new(BatchNorm::new(h)));
                layers.push(Box::new(Relu::new()));
                layers.push(Box::new(Dropout::new(p)?));
                width = h;
            }
            layers.push(Box::new(Dense::new(width, 1, &mut rng)));
        }
    }
    let model = ModelGraph {
        architecture,
        hyperparams: hyperparams.clone(),
        input_shape,
        layers,
        mode: Mode::Infer,
        optimizer: None,
        dropout_rng: rng::stream(seed, Stream::Dropout),
    };
    let out = model.layer_shapes()?;
    if out.last() != Some(&(1, 1)) {
        return Err(Error::InvalidHyperparams(format!("stack ends in {:?}, expected (1, 1)", out.last())));
    }
    Ok(model)
}

impl ModelGraph {
    /// Output `(T, F)` of every layer in order.
    pub fn layer_shapes(&self) -> Result<Vec<(usize, usize)>> {
        let mut shape = self.input_shape;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = layer.output_shape(shape)?;
            out.push(shape);
        }
        Ok(out)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|p| p.len()).sum()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn set_dropout_rng(&mut self, seed: u64) {
        self.dropout_rng = rng::stream(seed, Stream::Dropout);
    }

    fn check_input(&self, x: &Array3<f64>) -> Result<()> {
        let (_, t, f) = x.dim();
        if (t, f) != self.input_shape {
            return Err(Error::ShapeMismatch(format!("input ({t}, {f}), model expects {:?}", self.input_shape)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite input value".into()));
        }
        Ok(())
    }

    /// Logits without side effects (dropout off, running statistics).
    pub fn infer_logits(&self, x: &Array3<f64>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.as_standard_layout().into_owned();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h.iter().copied().collect())
    }

    /// Training-mode pass that caches activations for `backward`.
    pub fn forward_train(&mut self, x: &Array3<f64>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.as_standard_layout().into_owned();
        for layer in &mut self.layers {
            h = layer.forward(&h, &mut self.dropout_rng)?;
        }
        Ok(h.iter().copied().collect())
    }

    /// Backpropagates logit gradients through the stack, filling every
    /// parameter's `grad`.
    pub fn backward(&mut self, logit_grad: &[f64]) -> Result<Array3<f64>> {
        let mut g = Array3::from_shape_vec((logit_grad.len(), 1, 1), logit_grad.to_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    /// Adam step over every parameter.
    pub fn apply_gradients(&mut self, learning_rate: f64) -> Result<()> {
        let mut adam = self.optimizer.take().unwrap_or_else(|| Adam::new(learning_rate));
        adam.learning_rate = learning_rate;
        let result = {
            let mut params = self.params_mut();
            adam.step(&mut params)
        };
        self.optimizer = Some(adam);
        result
    }

    /// Every parameter followed by every buffer, in layer order.
    pub fn state_tensors(&self) -> Vec<Array2<f64>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.params().into_iter().map(|p| p.value.clone()));
            out.extend(layer.buffers().into_iter().cloned());
        }
        out
    }

    pub fn load_state_tensors(&mut self, tensors: &[Array2<f64>]) -> Result<()> {
        let slots: Vec<&mut Array2<f64>> = self.layers.iter_mut().flat_map(|l| l.state_mut()).collect();
        if slots.len() != tensors.len() {
            return Err(Error::CorruptCheckpoint(format!("{} tensors for a model with {}", tensors.len(), slots.len())));
        }
        for (slot, t) in slots.iter().zip(tensors) {
            if slot.dim() != t.dim() {
                return Err(Error::CorruptCheckpoint(format!("tensor shape {:?}, expected {:?}", t.dim(), slot.dim())));
            }
        }
        for (slot, t) in slots.into_iter().zip(tensors) {
            slot.assign(t);
        }
        Ok(())
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        Dropout::new(p)?;
        self.hyperparams.dropout_p = p;
        for layer in &mut self.layers {
            layer.set_dropout(p);
        }
        Ok(())
    }

    /// P(true alarm) per sample, evaluated in chunks.
    pub fn predict(&self, x: &Array3<f64>) -> Result<Vec<f64>> {
        const CHUNK: usize = 256;
        let mut out = Vec::with_capacity(x.dim().0);
        for start in (0..x.dim().0).step_by(CHUNK) {
            let end = (start + CHUNK).min(x.dim().0);
            let chunk = x.slice_axis(Axis(0), (start..end).into()).to_owned();
            out.extend(self.infer_logits(&chunk)?.into_iter().map(sigmoid));
        }
        Ok(out)
    }
}

/// Lifts an `N × D` feature matrix to the `N × 1 × D` model input.
pub fn features_to_input(features: &Array2<f64>) -> Array3<f64> {
    features.clone().insert_axis(Axis(1)).as_standard_layout().into_owned()
}

pub fn predict(model: &ModelGraph, inputs: &Array3<f64>) -> Result<Vec<f64>> {
    model.predict(inputs)
}
