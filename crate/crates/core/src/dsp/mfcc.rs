use serde::{Deserialize, Serialize};

use crate::dsp::mel::{build_mel_filterbank, dct2_matrix, mel_spectra_with, MelFilterbank};
use crate::dsp::stft::StftPlan;
use crate::dsp::{segment_stream, AudioBuffer, PreprocessConfig};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Time-averaged log-mel (or cepstral) vector of one segment.
#[derive(Clone, Debug, PartialEq)]
pub struct MfccVector<T> {
    pub coeffs: Vec<T>,
}

/// `S × D` block of consecutive vectors, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MfccSequence<T> {
    pub data: Vec<T>,
    pub rows: usize,
    pub cols: usize,
    pub source_id: String,
    /// Start time of the first stacked segment, in seconds.
    pub start_time: f64,
}

impl<T: Scalar> MfccSequence<T> {
    pub fn new(data: Vec<T>, rows: usize, cols: usize, source_id: impl Into<String>, start_time: f64) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "sequence {rows}×{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sequence contains non-finite values".into()));
        }
        Ok(Self {
            data,
            rows,
            cols,
            source_id: source_id.into(),
            start_time,
        })
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackMode {
    /// Non-overlapping blocks of `S` vectors.
    Tumbling,
    /// One sequence per new vector once `S` are available.
    Sliding,
}

/// Mean over the frame axis of a `D × frames` matrix.
pub fn time_average<T: Scalar>(mel: &Tensor<T>) -> Result<MfccVector<T>> {
    let [d, frames] = mel.dims2()?;
    if frames == 0 {
        return Err(Error::Empty("time_average needs at least one frame"));
    }
    let n = T::from_usize(frames).unwrap();
    let coeffs = mel
        .data()
        .chunks_exact(frames)
        .map(|row| row.iter().copied().sum::<T>() / n)
        .collect::<Vec<_>>();
    debug_assert_eq!(coeffs.len(), d);
    Ok(MfccVector { coeffs })
}

/// Stacks consecutive vectors into `S × D` sequences; a trailing remainder
/// shorter than `S` is dropped.
///
/// `first_time` is the start time of `vectors[0]`; vectors are assumed to be
/// one segment hop apart.
pub fn stack_sequences<T: Scalar>(
    vectors: &[MfccVector<T>],
    cfg: &PreprocessConfig,
    mode: StackMode,
    source_id: &str,
    first_time: f64,
) -> Result<Vec<MfccSequence<T>>> {
    let (s, d) = (cfg.stack_len, cfg.n_mels);
    if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.coeffs.len() != d) {
        return Err(Error::shape(format!(
            "vector {i} has {} coefficients, expected {d}",
            v.coeffs.len()
        )));
    }
    if vectors.len() < s {
        return Ok(Vec::new());
    }
    let hop_s = cfg.segment_hop_ms as f64 / 1000.0;
    let starts: Vec<usize> = match mode {
        StackMode::Tumbling => (0..vectors.len() / s).map(|i| i * s).collect(),
        StackMode::Sliding => (0..=vectors.len() - s).collect(),
    };
    starts
        .into_iter()
        .map(|start| {
            let data = vectors[start..start + s]
                .iter()
                .flat_map(|v| v.coeffs.iter().copied())
                .collect();
            MfccSequence::new(data, s, d, source_id, first_time + start as f64 * hop_s)
        })
        .collect()
}

/// Segment → spectrogram → log-mel → time average, with every plan built once.
pub struct MfccExtractor<T: Scalar> {
    cfg: PreprocessConfig,
    plan: StftPlan<T>,
    filterbank: MelFilterbank<T>,
    dct: Option<Tensor<T>>,
    floor: T,
}

impl<T: Scalar> MfccExtractor<T> {
    pub fn new(cfg: &PreprocessConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            plan: StftPlan::new(cfg),
            filterbank: build_mel_filterbank(cfg)?,
            dct: cfg.apply_dct.then(|| dct2_matrix(cfg.n_mels)),
            floor: T::lit(cfg.log_floor),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank<T> {
        &self.filterbank
    }

    /// Log-mel matrix (`D × frames`) of one segment.
    pub fn mel_matrix(&mut self, segment: &[T]) -> Result<Tensor<T>> {
        let spec = self.plan.process(segment)?;
        mel_spectra_with(&spec, &self.filterbank, self.floor, self.dct.as_ref())
    }

    pub fn vector(&mut self, segment: &[T]) -> Result<MfccVector<T>> {
        time_average(&self.mel_matrix(segment)?)
    }

    /// One vector per segment of `audio`, in time order.
    pub fn vectors(&mut self, audio: &AudioBuffer<T>) -> Result<Vec<MfccVector<T>>> {
        if audio.sample_rate != self.cfg.sample_rate {
            return Err(Error::config(format!(
                "audio is {} Hz but preprocessing expects {} Hz (no resampling)",
                audio.sample_rate, self.cfg.sample_rate
            )));
        }
        segment_stream(audio, &self.cfg)
            .into_iter()
            .map(|seg| self.vector(seg.samples))
            .collect()
    }
}

/// Full front end: audio → stacked `S × D` sequences.
pub fn preprocess<T: Scalar>(
    audio: &AudioBuffer<T>,
    cfg: &PreprocessConfig,
    mode: StackMode,
    source_id: &str,
) -> Result<Vec<MfccSequence<T>>> {
    let vectors = MfccExtractor::new(cfg)?.vectors(audio)?;
    stack_sequences(&vectors, cfg, mode, source_id, 0.0)
}
