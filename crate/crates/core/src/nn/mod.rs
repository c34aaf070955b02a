//! A small backpropagation engine with the two classifier stacks.
//!
//! - CNN: Conv1D → BatchNorm → ReLU → MaxPool(2) → multi-head self-attention
//!   → global average pool → Dense 256 → Dense 128 → Dense 1
//! - FCNN: four Dense → BatchNorm → ReLU → Dropout blocks (256, 192, 128, 64)
//!   → Dense 1
//!
//! Both end in a single logit; [`ModelGraph::predict`] applies the sigmoid.

pub mod attention;
pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use attention::MultiHeadAttention;
pub use checkpoint::{load_checkpoint, load_checkpoint_as, save_checkpoint};
pub use layers::{BatchNorm, Conv1d, Dense, Dropout, GlobalAvgPool, Layer, MaxPool1d, Param, Relu};
pub use loss::{sigmoid, weighted_bce};
pub use model::{build_model, features_to_input, predict, Architecture, Mode, ModelGraph, ModelHyperparams};
pub use optim::Adam;
pub use train::{batches, train, Dataset, EpochRecord, TrainConfig, TrainHistory};
