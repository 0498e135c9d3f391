//! Minimal tensor and neural-network kernel: 1-D convolution, dense layers,
//! activations, Xavier initialisation and Adam.

pub mod activation;
pub mod adam;
pub mod conv;
pub mod dense;
pub mod init;
pub mod io;
pub mod layer;
pub(crate) mod linalg;
pub mod tensor;

pub use activation::{activation_backward, activation_forward, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv1d_backward, conv1d_forward, Conv1d, ConvGrads};
pub use dense::{Dense, DenseGrads};
pub use init::{xavier_bound, xavier_uniform};
pub use layer::{Layer, LayerSpec, Sequential, Trace};
pub use tensor::Tensor;
