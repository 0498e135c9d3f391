use crate::error::{Error, Result};
use crate::eval::Threshold;
use crate::models::{Autoencoder, ModelKind, NormStats, Reconstruct};
use crate::nn::{Activation, Conv1d, Dense, Layer, Sequential, Tensor};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Index of the layer that produces the latent code (after its activation).
const LATENT_LAYER: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BottleneckConfig {
    pub n_features: usize,
    pub seq_len: usize,
    pub kernel: usize,
    /// Encoder output channels per stage; the decoder mirrors them.
    pub channels: [usize; 3],
    pub latent_dim: usize,
}

impl BottleneckConfig {
    /// Channel plan widening as time is halved: `D → 2D → 4D → 4D`.
    pub fn new(n_features: usize, seq_len: usize, kernel: usize) -> Self {
        Self {
            n_features,
            seq_len,
            kernel,
            channels: [2 * n_features, 4 * n_features, 4 * n_features],
            latent_dim: 128,
        }
    }

    /// Sequence length after each stride-2 encoder stage: `[S, ⌈S/2⌉, ⌈S/4⌉, ⌈S/8⌉]`.
    pub fn stage_lengths(&self) -> [usize; 4] {
        let l1 = self.seq_len.div_ceil(2);
        let l2 = l1.div_ceil(2);
        [self.seq_len, l1, l2, l2.div_ceil(2)]
    }
}

/// Conventional bottleneck convolutional auto-encoder used as the baseline.
///
/// Encoder: three stride-2 convolutions, flatten, dense to the latent code.
/// Decoder: dense back, then three stages of ×2 nearest-neighbour upsampling
/// (cropped to the mirrored encoder length) followed by a convolution.
#[derive(Clone, Debug)]
pub struct BottleneckAeModel<T> {
    net: Sequential<T>,
    config: BottleneckConfig,
    pub norm: NormStats<T>,
    pub threshold: Option<Threshold<T>>,
}

impl<T: Scalar> BottleneckAeModel<T> {
    pub fn new(config: BottleneckConfig) -> Result<Self> {
        let BottleneckConfig {
            n_features: d,
            seq_len,
            kernel: k,
            channels: [c1, c2, c3],
            latent_dim,
        } = config;
        if k % 2 == 0 {
            return Err(Error::config(format!("kernel must be odd, got {k}")));
        }
        if d == 0 || seq_len == 0 || latent_dim == 0 || c1 * c2 * c3 == 0 {
            return Err(Error::config("bottleneck dimensions must be positive"));
        }
        let [l0, l1, l2, l3] = config.stage_lengths();
        let relu = || Layer::Act(Activation::Relu);
        let layers = vec![
            Layer::Conv(Conv1d::zeros(d, c1, k, 2)?),
            relu(),
            Layer::Conv(Conv1d::zeros(c1, c2, k, 2)?),
            relu(),
            Layer::Conv(Conv1d::zeros(c2, c3, k, 2)?),
            relu(),
            Layer::Flatten,
            Layer::Dense(Dense::zeros(c3 * l3, latent_dim)),
            relu(),
            Layer::Dense(Dense::zeros(latent_dim, c3 * l3)),
            relu(),
            Layer::Unflatten {
                channels: c3,
                len: l3,
            },
            Layer::Upsample { factor: 2, out_len: l2 },
            Layer::Conv(Conv1d::zeros(c3, c2, k, 1)?),
            relu(),
            Layer::Upsample { factor: 2, out_len: l1 },
            Layer::Conv(Conv1d::zeros(c2, c1, k, 1)?),
            relu(),
            Layer::Upsample { factor: 2, out_len: l0 },
            Layer::Conv(Conv1d::zeros(c1, d, k, 1)?),
            Layer::Act(Activation::Sigmoid),
        ];
        Ok(Self {
            net: Sequential::new(layers),
            norm: NormStats::identity(d),
            threshold: None,
            config,
        })
    }

    pub fn seeded(config: BottleneckConfig, seed: u64) -> Result<Self> {
        let mut m = Self::new(config)?;
        m.net.init_xavier(&mut seeded(seed));
        Ok(m)
    }

    pub fn config(&self) -> &BottleneckConfig {
        &self.config
    }

    /// Latent codes `N × latent_dim` of a normalised `N × S × D` batch.
    pub fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = x.transpose_last2()?;
        for layer in &self.net.layers()[..=LATENT_LAYER] {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub(crate) fn from_parts(
        net: Sequential<T>,
        config: BottleneckConfig,
        norm: NormStats<T>,
        threshold: Option<Threshold<T>>,
    ) -> Result<Self> {
        let reference = Self::new(config.clone())?;
        if reference.net.spec() != net.spec() {
            return Err(Error::config("stored layers do not match the bottleneck configuration"));
        }
        Ok(Self {
            net,
            config,
            norm,
            threshold,
        })
    }
}

impl<T: Scalar> Reconstruct<T> for BottleneckAeModel<T> {
    fn norm_stats(&self) -> &NormStats<T> {
        &self.norm
    }

    fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        super::reconstruct_channels_first(&self.net, x, self.config.n_features, Some(self.config.seq_len))
    }
}

impl<T: Scalar> Autoencoder<T> for BottleneckAeModel<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Bottleneck
    }

    fn network(&self) -> &Sequential<T> {
        &self.net
    }

    fn network_mut(&mut self) -> &mut Sequential<T> {
        &mut self.net
    }

    fn n_features(&self) -> usize {
        self.config.n_features
    }

    fn seq_len(&self) -> usize {
        self.config.seq_len
    }

    fn kernel(&self) -> usize {
        self.config.kernel
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

    fn latent_dim(&self) -> Option<usize> {
        Some(self.config.latent_dim)
    }

    fn reinit(&mut self, seed: u64) {
        self.net.init_xavier(&mut seeded(seed));
    }
}
