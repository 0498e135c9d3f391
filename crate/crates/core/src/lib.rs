//! Non-compression auto-encoder (NCAE) pipeline for sound-based road-surface
//! anomaly detection: audio front end, a small convolutional network kernel,
//! training, evaluation, cost profiling and data handling.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod profiler;
pub mod rng;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type AudioBuffer = dsp::AudioBuffer<f64>;
pub type MfccSequence = dsp::MfccSequence<f64>;
pub type MfccVector = dsp::MfccVector<f64>;
pub type NcaeModel = models::NcaeModel<f64>;
pub type BottleneckAeModel = models::BottleneckAeModel<f64>;
pub type AnyModel = models::AnyModel<f64>;
pub type NormStats = models::NormStats<f64>;
pub type Threshold = eval::Threshold<f64>;
pub type ScoredSequence = eval::ScoredSequence<f64>;
pub type SequenceSplit = data::SequenceSplit<f64>;
