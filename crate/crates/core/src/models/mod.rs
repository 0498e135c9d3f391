//! NCAE and the bottleneck baseline, their normalisation, and on-disk persistence.

mod bottleneck;
mod ncae;
mod norm;
mod persist;

pub use bottleneck::{BottleneckAeModel, BottleneckConfig};
pub use ncae::{ncae_forward, ncae_param_formula, NcaeModel, NCAE_DEPTH};
pub use norm::{denormalize, normalize, NormStats};
pub use persist::{load_model, save_model, ModelManifest, MANIFEST_FILE, WEIGHTS_FILE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Threshold;
use crate::nn::{Sequential, Tensor};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ncae,
    Bottleneck,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ncae => "ncae",
            ModelKind::Bottleneck => "bottleneck",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ncae" => Ok(ModelKind::Ncae),
            "bottleneck" | "ae" => Ok(ModelKind::Bottleneck),
            other => Err(Error::config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Anything that maps a normalised `N × S × D` batch to its reconstruction.
pub trait Reconstruct<T: Scalar> {
    fn norm_stats(&self) -> &NormStats<T>;

    fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>>;
}

/// A trainable reconstruction model backed by a [`Sequential`] network that
/// operates in channel-first `N × D × S` layout.
pub trait Autoencoder<T: Scalar>: Reconstruct<T> {
    fn kind(&self) -> ModelKind;
    fn network(&self) -> &Sequential<T>;
    fn network_mut(&mut self) -> &mut Sequential<T>;
    fn n_features(&self) -> usize;
    fn seq_len(&self) -> usize;
    fn kernel(&self) -> usize;
    fn set_norm_stats(&mut self, stats: NormStats<T>);
    fn threshold(&self) -> Option<&Threshold<T>>;
    fn set_threshold(&mut self, threshold: Option<Threshold<T>>);
    /// Fresh Xavier weights from `seed`.
    fn reinit(&mut self, seed: u64);

    fn latent_dim(&self) -> Option<usize> {
        None
    }

    fn count_params(&self) -> usize {
        self.network().param_count()
    }
}

/// Either model, as loaded from disk.
#[derive(Clone, Debug)]
pub enum AnyModel<T> {
    Ncae(NcaeModel<T>),
    Bottleneck(BottleneckAeModel<T>),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Ncae($m) => $body,
            AnyModel::Bottleneck($m) => $body,
        }
    };
}

impl<T: Scalar> Reconstruct<T> for AnyModel<T> {
    fn norm_stats(&self) -> &NormStats<T> {
        delegate!(self, m => m.norm_stats())
    }

    fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        delegate!(self, m => m.reconstruct(x))
    }
}

impl<T: Scalar> Autoencoder<T> for AnyModel<T> {
    fn kind(&self) -> ModelKind {
        delegate!(self, m => m.kind())
    }
    fn network(&self) -> &Sequential<T> {
        delegate!(self, m => m.network())
    }
    fn network_mut(&mut self) -> &mut Sequential<T> {
        delegate!(self, m => m.network_mut())
    }
    fn n_features(&self) -> usize {
        delegate!(self, m => m.n_features())
    }
    fn seq_len(&self) -> usize {
        delegate!(self, m => m.seq_len())
    }
    fn kernel(&self) -> usize {
        delegate!(self, m => Autoencoder::kernel(m))
    }
    fn set_norm_stats(&mut self, stats: NormStats<T>) {
        delegate!(self, m => m.set_norm_stats(stats))
    }
    fn threshold(&self) -> Option<&Threshold<T>> {
        delegate!(self, m => m.threshold())
    }
    fn set_threshold(&mut self, threshold: Option<Threshold<T>>) {
        delegate!(self, m => m.set_threshold(threshold))
    }
    fn reinit(&mut self, seed: u64) {
        delegate!(self, m => m.reinit(seed))
    }
    fn latent_dim(&self) -> Option<usize> {
        delegate!(self, m => m.latent_dim())
    }
}

impl<T> From<NcaeModel<T>> for AnyModel<T> {
    fn from(m: NcaeModel<T>) -> Self {
        AnyModel::Ncae(m)
    }
}

impl<T> From<BottleneckAeModel<T>> for AnyModel<T> {
    fn from(m: BottleneckAeModel<T>) -> Self {
        AnyModel::Bottleneck(m)
    }
}

/// Runs `net` on an `N × S × D` batch by transposing into and out of `N × D × S`.
pub(crate) fn reconstruct_channels_first<T: Scalar>(
    net: &Sequential<T>,
    x: &Tensor<T>,
    n_features: usize,
    seq_len: Option<usize>,
) -> Result<Tensor<T>> {
    let [_, s, d] = x.dims3()?;
    if d != n_features {
        return Err(Error::shape(format!("expected {n_features} features, got {d}")));
    }
    if let Some(want) = seq_len {
        if s != want {
            return Err(Error::shape(format!("expected sequence length {want}, got {s}")));
        }
    }
    net.forward(&x.transpose_last2()?)?.transpose_last2()
}
