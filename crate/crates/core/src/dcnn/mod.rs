//! A small 2-D CNN with hand-written forward and backward passes, and its
//! trainer.

pub mod gradcheck;
mod gemm;
pub mod layers;
mod network;
mod optim;
mod real;
mod tensor;
mod train;

pub use gemm::{gemm_nn, gemm_nt, gemm_tn};
pub use layers::{
    he_uniform, relu_backward, relu_forward, softmax_cross_entropy, BatchNorm2d, BnCache, Conv2d, Linear, LossOutput,
    MaxPool2d, ParamGrad, PoolIndices,
};
pub use network::{BatchGradients, Dcnn, DcnnConfig, SkipMode, StepStats, Trace};
pub use optim::{Optimizer, OptimizerConfig};
pub use real::Real;
pub use tensor::Tensor;
pub use train::{channel_means, evaluate, train, EpochRecord, LabeledImages, TrainError, TrainOutcome};

use alloc::string::String;
use thiserror::Error;

/// The network as trained and saved.
pub type DcnnModel = Dcnn<f32>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcnnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch normalization needs at least 2 samples in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}
