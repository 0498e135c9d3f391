use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dsp::MfccSequence;
use crate::error::{Error, Result};
use crate::eval::{auroc, Label};
use crate::models::{normalize, Reconstruct};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Sequences scored per forward pass in [`score_batch`].
pub const SCORE_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence<T> {
    pub score: T,
    pub label: Label,
    pub source_id: String,
    pub start_time: f64,
}

/// Per-sample Euclidean distances between two `N × …` batches.
pub fn sample_distances<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>) -> Result<Vec<T>> {
    if x.shape() != y.shape() || x.ndim() == 0 {
        return Err(Error::shape(format!(
            "cannot compare shapes {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let n = x.shape()[0];
    if n == 0 {
        return Ok(Vec::new());
    }
    let per = x.len() / n;
    Ok(x.data()
        .chunks_exact(per)
        .zip(y.data().chunks_exact(per))
        .map(|(a, b)| a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum::<T>().sqrt())
        .collect())
}

/// Stacks sequences into an `N × S × D` batch of raw (unnormalised) values.
pub fn batch_tensor<T: Scalar>(seqs: &[&MfccSequence<T>]) -> Result<Tensor<T>> {
    let first = seqs.first().ok_or(Error::Empty("no sequences to batch"))?;
    let (s, d) = (first.rows, first.cols);
    let mut data = Vec::with_capacity(seqs.len() * s * d);
    for seq in seqs {
        if (seq.rows, seq.cols) != (s, d) {
            return Err(Error::shape(format!(
                "sequence '{}' is {}×{}, expected {s}×{d}",
                seq.source_id, seq.rows, seq.cols
            )));
        }
        data.extend_from_slice(&seq.data);
    }
    Tensor::new(vec![seqs.len(), s, d], data)
}

/// Reconstruction error of one sequence, measured on normalised values.
pub fn score<T: Scalar, M: Reconstruct<T> + ?Sized>(model: &M, seq: &MfccSequence<T>) -> Result<T> {
    Ok(score_batch(model, std::slice::from_ref(seq))?[0])
}

pub fn score_batch<T: Scalar, M: Reconstruct<T> + ?Sized>(model: &M, seqs: &[MfccSequence<T>]) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(seqs.len());
    for chunk in seqs.chunks(SCORE_CHUNK) {
        let refs: Vec<_> = chunk.iter().collect();
        let x = normalize(&batch_tensor(&refs)?, model.norm_stats())?;
        let y = model.reconstruct(&x)?;
        out.extend(sample_distances(&x, &y)?);
    }
    Ok(out)
}

pub fn score_labeled<T: Scalar, M: Reconstruct<T> + ?Sized>(
    model: &M,
    seqs: &[MfccSequence<T>],
    label: Label,
) -> Result<Vec<ScoredSequence<T>>> {
    Ok(score_batch(model, seqs)?
        .into_iter()
        .zip(seqs)
        .map(|(score, seq)| ScoredSequence {
            score,
            label,
            source_id: seq.source_id.clone(),
            start_time: seq.start_time,
        })
        .collect())
}

/// Test-set scores and their AUROC.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub auroc: f64,
    pub scored: Vec<ScoredSequence<T>>,
    /// Mean wall-clock scoring time per sequence.
    pub inference_seconds: f64,
}

pub fn evaluate<T: Scalar, M: Reconstruct<T> + ?Sized>(
    model: &M,
    normal: &[MfccSequence<T>],
    abnormal: &[MfccSequence<T>],
) -> Result<Evaluation<T>> {
    let started = Instant::now();
    let mut scored = score_labeled(model, normal, Label::Normal)?;
    scored.extend(score_labeled(model, abnormal, Label::Abnormal)?);
    let elapsed = started.elapsed().as_secs_f64();
    Ok(Evaluation {
        auroc: auroc(&scored)?,
        inference_seconds: elapsed / scored.len().max(1) as f64,
        scored,
    })
}
