use crate::dsp::{PreprocessConfig, Spectrogram};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the STFT bin grid, one row per band.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank<T> {
    /// `n_mels × bins`.
    pub weights: Tensor<T>,
    pub f_min: f64,
    pub f_max: f64,
    /// Peak frequency of each triangle in Hz.
    pub centers: Vec<f64>,
}

impl<T: Scalar> MelFilterbank<T> {
    pub fn n_mels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_bins(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn row(&self, band: usize) -> &[T] {
        let bins = self.n_bins();
        &self.weights.data()[band * bins..(band + 1) * bins]
    }
}

/// `D` triangles with centres equally spaced on the mel axis between
/// `f_min` and `f_max`. Each row is rescaled so its sampled peak is exactly 1.
pub fn build_mel_filterbank<T: Scalar>(cfg: &PreprocessConfig) -> Result<MelFilterbank<T>> {
    let d = cfg.n_mels;
    if d < 2 {
        return Err(Error::TooFewMelBands(d));
    }
    cfg.validate()?;
    let (f_min, f_max) = (cfg.f_min, cfg.upper_frequency());
    let (m_lo, m_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..d + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (d + 1) as f64))
        .collect();
    let bins = cfg.n_bins();
    let bin_hz = cfg.sample_rate as f64 / cfg.window_len as f64;

    let mut weights = vec![0.0f64; d * bins];
    for band in 0..d {
        let (lo, center, hi) = (edges[band], edges[band + 1], edges[band + 2]);
        let row = &mut weights[band * bins..(band + 1) * bins];
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * bin_hz;
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            *w = rising.min(falling).max(0.0);
        }
        let peak = row.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::config(format!(
                "mel band {band} ({lo:.1}-{hi:.1} Hz) covers no FFT bin; use fewer bands or a longer window"
            )));
        }
        for w in row.iter_mut() {
            *w /= peak;
        }
    }
    Ok(MelFilterbank {
        weights: Tensor::new(vec![d, bins], weights.into_iter().map(T::lit).collect())?,
        f_min,
        f_max,
        centers: edges[1..=d].to_vec(),
    })
}

/// Orthonormal type-II DCT matrix, `n × n`, row `k` = basis `k`.
pub fn dct2_matrix<T: Scalar>(n: usize) -> Tensor<T> {
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    Tensor::from_fn(&[n, n], |idx| {
        let (k, i) = (idx / n, idx % n);
        let s = if k == 0 { scale0 } else { scale };
        T::lit(s * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / n as f64).cos())
    })
}

/// Log mel energies, `D × frames`: `ln(max(fb · |X|², floor))`, optionally
/// followed by a DCT along the band axis.
pub fn mel_spectra<T: Scalar>(
    spec: &Spectrogram<T>,
    fb: &MelFilterbank<T>,
    cfg: &PreprocessConfig,
) -> Result<Tensor<T>> {
    let dct = cfg.apply_dct.then(|| dct2_matrix::<T>(fb.n_mels()));
    mel_spectra_with(spec, fb, T::lit(cfg.log_floor), dct.as_ref())
}

pub(crate) fn mel_spectra_with<T: Scalar>(
    spec: &Spectrogram<T>,
    fb: &MelFilterbank<T>,
    floor: T,
    dct: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    if spec.bins != fb.n_bins() {
        return Err(Error::shape(format!(
            "spectrogram has {} bins, filterbank expects {}",
            spec.bins,
            fb.n_bins()
        )));
    }
    let (d, frames, bins) = (fb.n_mels(), spec.frames, spec.bins);
    let power: Vec<T> = spec.magnitudes.iter().map(|&m| m * m).collect();
    let mut mel = vec![T::zero(); d * frames];
    crate::nn::linalg::gemm(
        d,
        bins,
        frames,
        fb.weights.data(),
        crate::nn::linalg::Op::N,
        &power,
        crate::nn::linalg::Op::N,
        T::zero(),
        &mut mel,
    );
    for v in &mut mel {
        *v = v.max(floor).ln();
    }
    if let Some(dct) = dct {
        let mut out = vec![T::zero(); d * frames];
        crate::nn::linalg::gemm(
            d,
            d,
            frames,
            dct.data(),
            crate::nn::linalg::Op::N,
            &mel,
            crate::nn::linalg::Op::N,
            T::zero(),
            &mut out,
        );
        mel = out;
    }
    Tensor::new(vec![d, frames], mel)
}
