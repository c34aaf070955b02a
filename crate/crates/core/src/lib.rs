//! Core library for classifying ventricular-tachycardia ICU alarms as true or
//! false from multichannel physiological waveforms.
//!
//! The pipeline stages map onto modules:
//!
//! - [`wfdb`]: `.hea`/`.dat` parsing (formats 16 and 212) and alarm windows
//! - [`preprocess`]: mean imputation, min-max scaling, stratified splits
//! - [`features`]: time-domain statistics, Welch PSD, coherence, Morlet CWT
//! - [`imbalance`]: SMOTE, ADASYN and balanced class weights
//! - [`nn`]: a small backprop engine with the CNN+attention and FCNN stacks
//! - [`eval`]: ROC-AUC, per-class metrics, threshold alerting
//! - [`synth`]: deterministic synthetic records and feature datasets
//! - [`io`]: CSV sidecars and feature matrices
//!
//! All randomness flows from explicit seeds through [`rng`].

pub mod error;
pub mod eval;
pub mod features;
pub mod imbalance;
pub mod io;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod wfdb;

mod label;

pub use error::{Error, Result};
pub use eval::{classification_metrics, decide_alert, roc_auc, AlertDecision, EvalReport};
pub use features::{build_feature_vector, FeatureConfig, FeatureVector, SpectralParams, WaveletConfig};
pub use imbalance::{class_weights, ClassWeights, ResampleConfig, ResampleMethod};
pub use label::Label;
pub use nn::{Architecture, ModelGraph, TrainConfig};
pub use preprocess::{DatasetSplit, ScalerParams};
pub use wfdb::{AlarmWindow, RecordHeader, SignalSpec, StorageFormat, WaveformRecord};
