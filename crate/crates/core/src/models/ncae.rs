use crate::error::{Error, Result};
use crate::eval::Threshold;
use crate::models::{Autoencoder, ModelKind, NormStats, Reconstruct};
use crate::nn::{Activation, Conv1d, Layer, Sequential, Tensor};
use crate::rng::seeded;
use crate::scalar::Scalar;

pub const NCAE_DEPTH: usize = 3;

/// Non-compression auto-encoder: three same-padded `D → D` convolutions
/// along the time axis, ReLU between them and a sigmoid output.
///
/// No layer changes the sequence length or the channel count.
#[derive(Clone, Debug)]
pub struct NcaeModel<T> {
    net: Sequential<T>,
    kernel: usize,
    n_features: usize,
    seq_len: usize,
    pub norm: NormStats<T>,
    pub threshold: Option<Threshold<T>>,
}

impl<T: Scalar> NcaeModel<T> {
    /// Zero-initialised model; call [`NcaeModel::init_xavier`] or load weights.
    pub fn new(n_features: usize, kernel: usize, seq_len: usize) -> Result<Self> {
        if kernel % 2 == 0 || kernel == 0 {
            return Err(Error::config(format!("kernel must be odd, got {kernel}")));
        }
        if n_features == 0 || seq_len == 0 {
            return Err(Error::config("n_features and seq_len must be positive"));
        }
        let mut layers = Vec::with_capacity(2 * NCAE_DEPTH);
        for i in 0..NCAE_DEPTH {
            layers.push(Layer::Conv(Conv1d::zeros(n_features, n_features, kernel, 1)?));
            layers.push(Layer::Act(if i + 1 == NCAE_DEPTH {
                Activation::Sigmoid
            } else {
                Activation::Relu
            }));
        }
        Ok(Self {
            net: Sequential::new(layers),
            kernel,
            n_features,
            seq_len,
            norm: NormStats::identity(n_features),
            threshold: None,
        })
    }

    /// Xavier-initialised model from a seed.
    pub fn seeded(n_features: usize, kernel: usize, seq_len: usize, seed: u64) -> Result<Self> {
        let mut m = Self::new(n_features, kernel, seq_len)?;
        m.init_xavier(seed);
        Ok(m)
    }

    pub fn init_xavier(&mut self, seed: u64) {
        self.net.init_xavier(&mut seeded(seed));
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub(crate) fn from_parts(
        net: Sequential<T>,
        kernel: usize,
        n_features: usize,
        seq_len: usize,
        norm: NormStats<T>,
        threshold: Option<Threshold<T>>,
    ) -> Self {
        Self {
            net,
            kernel,
            n_features,
            seq_len,
            norm,
            threshold,
        }
    }
}

/// Reconstruction `X̂` (N×S×D) of a normalised batch `X` (N×S×D).
pub fn ncae_forward<T: Scalar>(x: &Tensor<T>, model: &NcaeModel<T>) -> Result<Tensor<T>> {
    model.reconstruct(x)
}

impl<T: Scalar> Reconstruct<T> for NcaeModel<T> {
    fn norm_stats(&self) -> &NormStats<T> {
        &self.norm
    }

    fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        super::reconstruct_channels_first(&self.net, x, self.n_features, None)
    }
}

impl<T: Scalar> Autoencoder<T> for NcaeModel<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Ncae
    }

    fn network(&self) -> &Sequential<T> {
        &self.net
    }

    fn network_mut(&mut self) -> &mut Sequential<T> {
        &mut self.net
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn seq_len(&self) -> usize {
        self.seq_len
    }

    fn kernel(&self) -> usize {
        self.kernel
    }

    fn set_norm_stats(&mut self, stats: NormStats<T>) {
        self.norm = stats;
    }

    fn threshold(&self) -> Option<&Threshold<T>> {
        self.threshold.as_ref()
    }

    fn set_threshold(&mut self, threshold: Option<Threshold<T>>) {
        self.threshold = threshold;
    }

    fn reinit(&mut self, seed: u64) {
        self.init_xavier(seed);
    }
}

/// `3 · (k·D² + D)`.
pub fn ncae_param_formula(n_features: usize, kernel: usize) -> usize {
    NCAE_DEPTH * (kernel * n_features * n_features + n_features)
}
