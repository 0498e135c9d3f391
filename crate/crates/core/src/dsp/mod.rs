//! Audio front end: segmenting, STFT, mel filterbank, time-averaged vectors
//! and stacking into `S × D` sequences.

mod config;
pub mod mel;
pub mod mfcc;
pub mod stft;
pub mod stream;

pub use config::PreprocessConfig;
pub use mel::{build_mel_filterbank, hz_to_mel, mel_spectra, mel_to_hz, MelFilterbank};
pub use mfcc::{preprocess, stack_sequences, time_average, MfccExtractor, MfccSequence, MfccVector, StackMode};
pub use stft::{hann_window, stft, Spectrogram, StftPlan};
pub use stream::{rms, MfccStream, SequenceWindow};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mono sample stream.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::config("sample_rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// A borrowed window of an [`AudioBuffer`].
#[derive(Clone, Copy, Debug)]
pub struct AudioSegment<'a, T> {
    pub start_sample: usize,
    pub samples: &'a [T],
}

/// Fixed-length segments at the configured cadence; a trailing partial
/// segment is dropped and audio shorter than one segment yields nothing.
pub fn segment_stream<'a, T: Scalar>(audio: &'a AudioBuffer<T>, cfg: &PreprocessConfig) -> Vec<AudioSegment<'a, T>> {
    let len = cfg.segment_samples();
    let hop = cfg.segment_hop_samples();
    let n = audio.samples.len();
    if n < len || len == 0 || hop == 0 {
        return Vec::new();
    }
    (0..=(n - len) / hop)
        .map(|i| AudioSegment {
            start_sample: i * hop,
            samples: &audio.samples[i * hop..i * hop + len],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silence(ms: usize) -> AudioBuffer<f64> {
        AudioBuffer::new(vec![0.0; ms * 441 / 10], 44_100).unwrap()
    }

    #[test]
    fn segment_counts() {
        let cfg = PreprocessConfig::default();
        let one_sec = silence(1000);
        let segs = segment_stream(&one_sec, &cfg);
        assert_eq!(segs.len(), 3);
        let starts: Vec<_> = segs.iter().map(|s| s.start_sample).collect();
        assert_eq!(starts, vec![0, 11_025, 22_050]);
        assert!(segs.iter().all(|s| s.samples.len() == 22_050));
        assert_eq!(segment_stream(&silence(500), &cfg).len(), 1);
        assert!(segment_stream(&silence(499), &cfg).is_empty());
    }

    #[test]
    fn rejects_non_finite_audio() {
        assert!(AudioBuffer::new(vec![0.0, f64::NAN], 8000).is_err());
        assert!(AudioBuffer::<f64>::new(vec![], 0).is_err());
    }
}
