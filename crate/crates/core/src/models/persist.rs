//! A saved model is a directory holding `weights.bin` (see [`crate::nn::io`])
//! and `manifest.json`. Nothing run-dependent is written, so saving the same
//! model twice produces identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::PreprocessConfig;
use crate::error::{Error, Result};
use crate::eval::Threshold;
use crate::models::{
    AnyModel, Autoencoder, BottleneckAeModel, BottleneckConfig, ModelKind, NcaeModel, NormStats,
};
use crate::nn::io::{read_tensors, write_tensors};
use crate::nn::{Layer, LayerSpec, Sequential};
use crate::scalar::Scalar;

pub const WEIGHTS_FILE: &str = "weights.bin";
pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub format_version: u32,
    pub kind: ModelKind,
    pub dtype: String,
    pub n_features: usize,
    pub seq_len: usize,
    pub kernel: usize,
    pub param_count: usize,
    pub activations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_dim: Option<usize>,
    pub layers: Vec<LayerSpec>,
    pub norm_min: Vec<f64>,
    pub norm_max: Vec<f64>,
    pub threshold: Option<Threshold<f64>>,
    pub preprocess: Option<PreprocessConfig>,
}

impl ModelManifest {
    pub fn describe<T: Scalar, M: Autoencoder<T>>(model: &M, preprocess: Option<&PreprocessConfig>) -> Self {
        let net = model.network();
        let activations = net
            .layers()
            .iter()
            .filter_map(|l| match l {
                Layer::Act(a) => Some(a.to_string()),
                _ => None,
            })
            .collect();
        let channels = match model.kind() {
            ModelKind::Bottleneck => Some(bottleneck_channels(&net.spec())),
            ModelKind::Ncae => None,
        };
        let norm = model.norm_stats();
        Self {
            format_version: MANIFEST_VERSION,
            kind: model.kind(),
            dtype: T::DTYPE.to_string(),
            n_features: model.n_features(),
            seq_len: model.seq_len(),
            kernel: model.kernel(),
            param_count: model.count_params(),
            activations,
            channels,
            latent_dim: model.latent_dim(),
            layers: net.spec(),
            norm_min: norm.min.iter().map(|v| v.as_f64()).collect(),
            norm_max: norm.max.iter().map(|v| v.as_f64()).collect(),
            threshold: model.threshold().map(|t| t.cast()),
            preprocess: preprocess.cloned(),
        }
    }
}

fn bottleneck_channels(spec: &[LayerSpec]) -> [usize; 3] {
    let mut out = [0; 3];
    let convs = spec.iter().filter_map(|s| match s {
        LayerSpec::Conv { out_channels, .. } => Some(*out_channels),
        _ => None,
    });
    for (slot, c) in out.iter_mut().zip(convs) {
        *slot = c;
    }
    out
}

pub fn save_model<T: Scalar, M: Autoencoder<T>>(
    dir: &Path,
    model: &M,
    preprocess: Option<&PreprocessConfig>,
) -> Result<ModelManifest> {
    fs::create_dir_all(dir)?;
    let net = model.network();
    let names = net.param_names();
    let named: Vec<(String, _)> = names.into_iter().zip(net.params()).collect();
    write_tensors(&dir.join(WEIGHTS_FILE), &named)?;
    let manifest = ModelManifest::describe(model, preprocess);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

pub fn load_model<T: Scalar>(dir: &Path) -> Result<(AnyModel<T>, ModelManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::format(&manifest_path, format!("cannot read manifest: {e}")))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    let bad = |msg: String| Error::format(&manifest_path, msg);
    if manifest.format_version != MANIFEST_VERSION {
        return Err(bad(format!("unsupported manifest version {}", manifest.format_version)));
    }
    if manifest.dtype != T::DTYPE {
        return Err(bad(format!("model stored as {}, loading as {}", manifest.dtype, T::DTYPE)));
    }

    let mut net = Sequential::<T>::from_spec(&manifest.layers)?;
    let weights_path = dir.join(WEIGHTS_FILE);
    let tensors = read_tensors::<T>(&weights_path)?;
    let names = net.param_names();
    if tensors.len() != names.len() {
        return Err(Error::format(
            &weights_path,
            format!("expected {} tensors, found {}", names.len(), tensors.len()),
        ));
    }
    for ((slot, want), (name, t)) in net.params_mut().into_iter().zip(&names).zip(tensors) {
        if &name != want || slot.shape() != t.shape() {
            return Err(Error::format(
                &weights_path,
                format!("tensor '{name}' {:?} does not match '{want}' {:?}", t.shape(), slot.shape()),
            ));
        }
        *slot = t;
    }

    let lit = |v: &Vec<f64>| v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>();
    let norm = NormStats::new(lit(&manifest.norm_min), lit(&manifest.norm_max))?;
    if norm.n_features() != manifest.n_features {
        return Err(bad("normalisation length does not match n_features".into()));
    }
    let threshold = manifest.threshold.map(|t| t.cast());
    let model = match manifest.kind {
        ModelKind::Ncae => {
            let reference = NcaeModel::<T>::new(manifest.n_features, manifest.kernel, manifest.seq_len)?;
            if reference.network().spec() != manifest.layers {
                return Err(bad("layer list is not an NCAE stack".into()));
            }
            AnyModel::Ncae(NcaeModel::from_parts(
                net,
                manifest.kernel,
                manifest.n_features,
                manifest.seq_len,
                norm,
                threshold,
            ))
        }
        ModelKind::Bottleneck => {
            let config = BottleneckConfig {
                n_features: manifest.n_features,
                seq_len: manifest.seq_len,
                kernel: manifest.kernel,
                channels: manifest.channels.ok_or_else(|| bad("bottleneck manifest lacks channels".into()))?,
                latent_dim: manifest.latent_dim.ok_or_else(|| bad("bottleneck manifest lacks latent_dim".into()))?,
            };
            AnyModel::Bottleneck(BottleneckAeModel::from_parts(net, config, norm, threshold)?)
        }
    };
    Ok((model, manifest))
}
