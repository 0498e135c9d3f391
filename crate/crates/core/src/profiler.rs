//! Static parameter and FLOPs accounting.
//!
//! Convention: a multiply–accumulate is 2 FLOPs, every bias add is counted,
//! hidden activations are free, and one elementwise pass over the network
//! output is counted once.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ncae_param_formula, Autoencoder, NCAE_DEPTH};
use crate::nn::{Layer, Sequential};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCost {
    pub index: usize,
    pub name: String,
    pub params: usize,
    pub flops: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub params: usize,
    pub flops: u64,
    /// `flops / 1e6` rounded to 3 decimals.
    pub mflops: f64,
    pub layers: Vec<LayerCost>,
}

/// Rounds to 3 decimals, halves away from zero.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Truncates toward zero at 3 decimals.
pub fn trunc3(x: f64) -> f64 {
    (x * 1000.0 + 1e-9).trunc() / 1000.0
}

enum Shape {
    Seq { channels: usize, len: usize },
    Flat(usize),
}

/// Walks `net` for a single `channels × len` input.
pub fn network_cost<T: Scalar>(net: &Sequential<T>, channels: usize, len: usize) -> Result<CostReport> {
    let mut shape = Shape::Seq { channels, len };
    let mut layers = Vec::new();
    for (index, layer) in net.layers().iter().enumerate() {
        let (name, flops, next) = match (layer, &shape) {
            (Layer::Conv(c), &Shape::Seq { channels, len }) => {
                if channels != c.in_channels() {
                    return Err(Error::shape(format!("layer {index} expects {} channels, got {channels}", c.in_channels())));
                }
                let out_len = c.output_len(len);
                let (k, cin, cout) = (c.kernel() as u64, c.in_channels() as u64, c.out_channels() as u64);
                let f = 2 * k * cin * cout * out_len as u64 + cout * out_len as u64;
                let name = format!("conv {cin}->{cout} k{k} s{}", c.stride());
                (name, f, Shape::Seq { channels: c.out_channels(), len: out_len })
            }
            (Layer::Dense(d), &Shape::Flat(n)) => {
                if n != d.inputs() {
                    return Err(Error::shape(format!("layer {index} expects {} inputs, got {n}", d.inputs())));
                }
                let f = 2 * d.inputs() as u64 * d.outputs() as u64 + d.outputs() as u64;
                (format!("dense {}->{}", d.inputs(), d.outputs()), f, Shape::Flat(d.outputs()))
            }
            (Layer::Act(a), _) => (format!("{a}"), 0, shape),
            (Layer::Upsample { factor, out_len }, &Shape::Seq { channels, .. }) => (
                format!("upsample x{factor}"),
                0,
                Shape::Seq { channels, len: *out_len },
            ),
            (Layer::Flatten, &Shape::Seq { channels, len }) => ("flatten".into(), 0, Shape::Flat(channels * len)),
            (Layer::Unflatten { channels, len }, &Shape::Flat(_)) => (
                "unflatten".into(),
                0,
                Shape::Seq { channels: *channels, len: *len },
            ),
            _ => return Err(Error::shape(format!("layer {index} cannot follow the previous shape"))),
        };
        layers.push(LayerCost { index, name, params: layer.param_count(), flops });
        shape = next;
    }
    let out_elems = match shape {
        Shape::Seq { channels, len } => channels * len,
        Shape::Flat(n) => n,
    } as u64;
    layers.push(LayerCost {
        index: net.layers().len(),
        name: "output pass".into(),
        params: 0,
        flops: out_elems,
    });
    let params = layers.iter().map(|l| l.params).sum();
    let flops = layers.iter().map(|l| l.flops).sum();
    Ok(CostReport { params, flops, mflops: round3(flops as f64 / 1e6), layers })
}

/// Cost of one `S × D` sequence through `model`.
pub fn profile<T: Scalar, M: Autoencoder<T> + ?Sized>(model: &M, seq_len: usize) -> Result<CostReport> {
    if seq_len == 0 {
        return Err(Error::config("sequence length must be at least 1"));
    }
    network_cost(model.network(), model.n_features(), seq_len)
}

/// Closed form of the NCAE FLOPs: `3·(2·k·D²·S + D·S) + D·S`.
pub fn ncae_flops_formula(n_features: usize, kernel: usize, seq_len: usize) -> u64 {
    let (d, k, s) = (n_features as u64, kernel as u64, seq_len as u64);
    NCAE_DEPTH as u64 * (2 * k * d * d * s + d * s) + d * s
}

/// One row of the published cost table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PublishedRow {
    pub model: &'static str,
    pub kernel: usize,
    pub params: usize,
    pub mflops: f64,
}

const fn row(model: &'static str, kernel: usize, params: usize, mflops: f64) -> PublishedRow {
    PublishedRow { model, kernel, params, mflops }
}

/// Published parameter counts and MFLOPs of the comparison models (recurrent
/// FARED has no kernel size; it is listed with kernel 0). These are quoted
/// figures, never recomputed.
pub const PUBLISHED_COSTS: [PublishedRow; 10] = [
    row("FARED", 0, 594_432, 38.538),
    row("AE", 3, 2_726_144, 40.001),
    row("AE", 5, 3_840_256, 65.233),
    row("AE", 7, 4_954_368, 90.464),
    row("VAE", 3, 3_250_560, 41.050),
    row("VAE", 5, 4_364_672, 66.281),
    row("VAE", 7, 5_478_784, 91.513),
    row("HP-GAN", 3, 3_567_233, 194.736),
    row("HP-GAN", 5, 5_238_401, 321.483),
    row("HP-GAN", 7, 6_909_569, 448.229),
];

/// Published NCAE rows, used as the target of the S inversion.
pub const PUBLISHED_NCAE: [PublishedRow; 3] = [
    row("NCAE", 3, 147_840, 8.863),
    row("NCAE", 5, 246_144, 14.761),
    row("NCAE", 7, 344_448, 20.659),
];

pub const RATIO_MODELS: [&str; 4] = ["FARED", "AE", "VAE", "HP-GAN"];

/// NCAE cost as a percentage of another model's.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRatio {
    pub model: &'static str,
    /// Exact params ratio × 100.
    pub params_pct: f64,
    /// MFLOPs ratio × 100 from the 3-decimal MFLOPs figures.
    pub mflops_pct: f64,
    /// Range of the MFLOPs ratio when each 3-decimal figure may be off by
    /// half a unit in its last place.
    pub mflops_pct_range: (f64, f64),
}

impl CostRatio {
    /// 3-decimal display value (truncated).
    pub fn params_display(&self) -> f64 {
        trunc3(self.params_pct)
    }

    pub fn mflops_display(&self) -> f64 {
        trunc3(self.mflops_pct)
    }

    /// Whether a 3-decimal figure is consistent with this ratio, given that
    /// the MFLOPs inputs are themselves rounded: some value in
    /// `mflops_pct_range` must truncate to it.
    pub fn mflops_consistent_with(&self, printed: f64) -> bool {
        let (lo, hi) = self.mflops_pct_range;
        trunc3(lo) <= printed + 1e-9 && printed - 1e-9 <= trunc3(hi)
    }
}

/// Ratios at kernel 3 (FARED has a single row).
pub fn cost_ratios(ncae: &CostReport) -> Vec<CostRatio> {
    const HALF_ULP: f64 = 5e-4;
    RATIO_MODELS
        .iter()
        .map(|&model| {
            let other = PUBLISHED_COSTS
                .iter()
                .find(|r| r.model == model && (r.kernel == 3 || r.kernel == 0))
                .expect("every ratio model has a kernel-3 row");
            let lo = (ncae.mflops - HALF_ULP) / (other.mflops + HALF_ULP) * 100.0;
            let hi = (ncae.mflops + HALF_ULP) / (other.mflops - HALF_ULP) * 100.0;
            CostRatio {
                model,
                params_pct: ncae.params as f64 / other.params as f64 * 100.0,
                mflops_pct: ncae.mflops / other.mflops * 100.0,
                mflops_pct_range: (lo, hi),
            }
        })
        .collect()
}

/// Recovers `S` from 3-decimal NCAE MFLOPs figures `(kernel, mflops)`.
///
/// Each row is inverted through [`ncae_flops_formula`], and the candidate is
/// accepted only if it reproduces the printed figure; all rows must agree.
pub fn derive_s_from_flops(n_features: usize, rows: &[(usize, f64)]) -> Result<usize> {
    let mut found: Option<usize> = None;
    for &(kernel, mflops) in rows {
        let per_s = ncae_flops_formula(n_features, kernel, 1) as f64;
        let s = (mflops * 1e6 / per_s).round() as usize;
        let back = round3(ncae_flops_formula(n_features, kernel, s) as f64 / 1e6);
        if s == 0 || (back - mflops).abs() > 1e-9 {
            return Err(Error::InconsistentFlops(format!(
                "k={kernel}: {mflops} MFLOPs is not reproduced by any integer S (nearest S={s} gives {back})"
            )));
        }
        match found {
            Some(prev) if prev != s => {
                return Err(Error::InconsistentFlops(format!("k={kernel} implies S={s}, earlier rows imply S={prev}")))
            }
            _ => found = Some(s),
        }
    }
    found.ok_or(Error::Empty("no FLOPs rows to invert"))
}

/// Table of params/MFLOPs per kernel followed by the ratio table, as text.
pub fn render_tables(ncae: &[(usize, CostReport)], ratios: &[CostRatio]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} {:>6} {:>12} {:>10}", "model", "kernel", "params", "MFLOPs");
    for (k, r) in ncae {
        let _ = writeln!(out, "{:<8} {:>6} {:>12} {:>10.3}", "NCAE", k, r.params, r.mflops);
    }
    for p in PUBLISHED_COSTS {
        let k = if p.kernel == 0 { "-".to_string() } else { p.kernel.to_string() };
        let _ = writeln!(out, "{:<8} {:>6} {:>12} {:>10.3}", p.model, k, p.params, p.mflops);
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:<10}", "NCAE / x");
    for r in ratios {
        let _ = write!(out, " {:>9}", r.model);
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:<10}", "params");
    for r in ratios {
        let _ = write!(out, " {:>8.3}%", r.params_display());
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:<10}", "MFLOPs");
    for r in ratios {
        let _ = write!(out, " {:>8.3}%", r.mflops_display());
    }
    let _ = writeln!(out);
    out
}

/// Helper for callers that only need the closed-form parameter count.
pub fn ncae_params(n_features: usize, kernel: usize) -> usize {
    ncae_param_formula(n_features, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BottleneckAeModel, BottleneckConfig, NcaeModel};

    fn ncae_cost(k: usize) -> CostReport {
        profile(&NcaeModel::<f64>::new(128, k, 30).unwrap(), 30).unwrap()
    }

    #[test]
    fn ncae_rows() {
        for (k, flops, mflops) in [(3, 8_862_720, 8.863), (5, 14_760_960, 14.761), (7, 20_659_200, 20.659)] {
            let r = ncae_cost(k);
            assert_eq!(r.flops, flops);
            assert_eq!(r.flops, ncae_flops_formula(128, k, 30));
            assert_eq!(r.mflops, mflops);
            assert_eq!(r.params, ncae_params(128, k));
        }
    }

    #[test]
    fn per_layer_breakdown() {
        let r = ncae_cost(3);
        let conv: Vec<_> = r.layers.iter().filter(|l| l.name.starts_with("conv")).collect();
        assert_eq!(conv.len(), 3);
        assert!(conv.iter().all(|l| l.flops == 2 * 3 * 128 * 128 * 30 + 128 * 30));
        assert_eq!(r.layers.last().unwrap().flops, 128 * 30);
    }

    #[test]
    fn derive_s() {
        let rows: Vec<_> = PUBLISHED_NCAE.iter().map(|r| (r.kernel, r.mflops)).collect();
        assert_eq!(derive_s_from_flops(128, &rows).unwrap(), 30);
        for (k, m) in rows {
            assert_eq!(round3(ncae_flops_formula(128, k, 30) as f64 / 1e6), m);
        }
    }

    #[test]
    fn perturbed_row_is_inconsistent() {
        let err = derive_s_from_flops(128, &[(3, 8.900), (5, 14.761), (7, 20.659)]).unwrap_err();
        assert!(matches!(err, Error::InconsistentFlops(_)));
        let err = derive_s_from_flops(128, &[(3, 8.863), (5, 14.269)]).unwrap_err();
        assert!(matches!(err, Error::InconsistentFlops(_)), "{err}");
    }

    #[test]
    fn ratios_match_published_percentages() {
        let ratios = cost_ratios(&ncae_cost(3));
        let params = [24.870, 5.423, 4.548, 4.144];
        let mflops = [22.998, 22.156, 21.591, 4.551];
        for ((r, p), m) in ratios.iter().zip(params).zip(mflops) {
            assert_eq!(r.params_display(), p, "{}", r.model);
            assert!(r.mflops_consistent_with(m), "{}: {:?}", r.model, r.mflops_pct_range);
        }
        assert!((ratios[1].mflops_pct - 8.863 / 40.001 * 100.0).abs() < 1e-12);
    }

    #[test]
    fn consistency_check_rejects_far_values() {
        let ratios = cost_ratios(&ncae_cost(3));
        assert!(!ratios[2].mflops_consistent_with(21.600));
        assert!(!ratios[0].mflops_consistent_with(23.100));
    }

    #[test]
    fn bottleneck_costs_more() {
        let ncae = ncae_cost(3);
        let ae = profile(&BottleneckAeModel::<f64>::new(BottleneckConfig::new(128, 30, 3)).unwrap(), 30).unwrap();
        assert!(ae.flops > 4 * ncae.flops, "{} vs {}", ae.flops, ncae.flops);
    }

    #[test]
    fn rendered_tables_mention_all_models() {
        let ncae: Vec<_> = [3, 5, 7].iter().map(|&k| (k, ncae_cost(k))).collect();
        let text = render_tables(&ncae, &cost_ratios(&ncae[0].1));
        for m in ["NCAE", "FARED", "AE", "VAE", "HP-GAN", "8.863", "24.870%"] {
            assert!(text.contains(m), "missing {m}:\n{text}");
        }
    }
}
