//! Incremental front end for live detection: bounded memory regardless of
//! stream length.

use std::collections::VecDeque;

use crate::dsp::{MfccExtractor, MfccSequence, MfccVector, PreprocessConfig};
use crate::error::Result;
use crate::scalar::Scalar;

/// Emits one vector per segment hop once a full segment is buffered.
pub struct MfccStream<T: Scalar> {
    extractor: MfccExtractor<T>,
    buffer: VecDeque<T>,
    /// Absolute index of `buffer[0]`.
    buffer_start: u64,
    next_segment: u64,
    segment_len: usize,
    hop: usize,
}

impl<T: Scalar> MfccStream<T> {
    pub fn new(cfg: &PreprocessConfig) -> Result<Self> {
        let extractor = MfccExtractor::new(cfg)?;
        Ok(Self {
            extractor,
            buffer: VecDeque::with_capacity(cfg.segment_samples() * 2),
            buffer_start: 0,
            next_segment: 0,
            segment_len: cfg.segment_samples(),
            hop: cfg.segment_hop_samples(),
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        self.extractor.config()
    }

    /// Feeds samples; returns `(segment start in seconds, segment samples RMS, vector)`
    /// for every segment completed by this chunk.
    pub fn push(&mut self, samples: &[T]) -> Result<Vec<(f64, T, MfccVector<T>)>> {
        let rate = self.config().sample_rate as f64;
        let mut out = Vec::new();
        self.buffer.extend(samples.iter().copied());
        loop {
            let offset = (self.next_segment - self.buffer_start) as usize;
            if self.buffer.len() < offset + self.segment_len {
                break;
            }
            let segment: Vec<T> = self
                .buffer
                .range(offset..offset + self.segment_len)
                .copied()
                .collect();
            let rms = rms(&segment);
            let v = self.extractor.vector(&segment)?;
            out.push((self.next_segment as f64 / rate, rms, v));
            self.next_segment += self.hop as u64;
            let drop = ((self.next_segment - self.buffer_start) as usize).min(self.buffer.len());
            self.buffer.drain(..drop);
            self.buffer_start += drop as u64;
        }
        Ok(out)
    }

    /// Samples currently held; never more than one segment plus the last chunk.
    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }
}

pub fn rms<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    (x.iter().map(|&v| v * v).sum::<T>() / T::from_usize(x.len()).unwrap()).sqrt()
}

/// Ring of the `S` most recent vectors.
pub struct SequenceWindow<T> {
    vectors: VecDeque<(f64, MfccVector<T>)>,
    stack_len: usize,
    n_features: usize,
}

impl<T: Scalar> SequenceWindow<T> {
    pub fn new(stack_len: usize, n_features: usize) -> Self {
        Self {
            vectors: VecDeque::with_capacity(stack_len),
            stack_len,
            n_features,
        }
    }

    /// Adds a vector; returns the current `S × D` window once it is full.
    pub fn push(&mut self, time: f64, v: MfccVector<T>, source_id: &str) -> Result<Option<MfccSequence<T>>> {
        if self.vectors.len() == self.stack_len {
            self.vectors.pop_front();
        }
        self.vectors.push_back((time, v));
        if self.vectors.len() < self.stack_len {
            return Ok(None);
        }
        let data = self
            .vectors
            .iter()
            .flat_map(|(_, v)| v.coeffs.iter().copied())
            .collect();
        let start = self.vectors.front().unwrap().0;
        MfccSequence::new(data, self.stack_len, self.n_features, source_id, start).map(Some)
    }

    pub fn reset(&mut self) {
        self.vectors.clear();
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}
