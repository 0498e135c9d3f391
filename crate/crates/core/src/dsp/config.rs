use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Front-end parameters: Fourier framing, mel bands, segment cadence and stacking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Sampling rate `F` in Hz.
    pub sample_rate: u32,
    /// Fourier window length `W` in samples.
    pub window_len: usize,
    /// Fourier hop `H` in samples.
    pub hop_len: usize,
    /// Feature dimension `D` (number of mel bands).
    pub n_mels: usize,
    /// Number of stacked vectors `S` per sequence.
    pub stack_len: usize,
    /// Segment length in milliseconds.
    pub segment_ms: u32,
    /// Segment cadence in milliseconds.
    pub segment_hop_ms: u32,
    /// Apply an orthonormal type-II DCT across bands after the log.
    pub apply_dct: bool,
    /// Lower clamp applied before the logarithm.
    pub log_floor: f64,
    pub f_min: f64,
    /// Upper filterbank edge; `None` means Nyquist.
    pub f_max: Option<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44_100,
            window_len: 2048,
            hop_len: 512,
            n_mels: 128,
            stack_len: 30,
            segment_ms: 500,
            segment_hop_ms: 250,
            apply_dct: false,
            log_floor: 1e-10,
            f_min: 0.0,
            f_max: None,
        }
    }
}

impl PreprocessConfig {
    pub fn segment_samples(&self) -> usize {
        (self.segment_ms as u64 * self.sample_rate as u64 / 1000) as usize
    }

    pub fn segment_hop_samples(&self) -> usize {
        (self.segment_hop_ms as u64 * self.sample_rate as u64 / 1000) as usize
    }

    pub fn n_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn upper_frequency(&self) -> f64 {
        self.f_max.unwrap_or_else(|| self.nyquist())
    }

    /// Frames produced by non-centred framing of one segment.
    pub fn frames_per_segment(&self) -> usize {
        1 + (self.segment_samples() - self.window_len) / self.hop_len
    }

    /// Shortest stream (in samples) that yields one full stacked sequence.
    pub fn warmup_samples(&self) -> usize {
        self.segment_samples() + (self.stack_len - 1) * self.segment_hop_samples()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if self.window_len == 0 {
            return fail("window_len must be positive".into());
        }
        if self.hop_len == 0 || self.hop_len > self.window_len {
            return fail(format!(
                "hop_len must be in 1..={}, got {}",
                self.window_len, self.hop_len
            ));
        }
        if self.n_mels == 0 {
            return fail("n_mels must be positive".into());
        }
        if self.stack_len == 0 {
            return fail("stack_len must be positive".into());
        }
        if self.segment_hop_ms == 0 || self.segment_hop_samples() == 0 {
            return fail("segment_hop_ms must cover at least one sample".into());
        }
        if self.segment_samples() < self.window_len {
            return fail(format!(
                "segment of {} ms holds {} samples, fewer than window_len {}",
                self.segment_ms,
                self.segment_samples(),
                self.window_len
            ));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return fail(format!("log_floor must be positive, got {}", self.log_floor));
        }
        let f_max = self.upper_frequency();
        if !(self.f_min >= 0.0 && self.f_min < f_max && f_max <= self.nyquist()) {
            return fail(format!(
                "mel range must satisfy 0 <= f_min < f_max <= {}, got {}..{}",
                self.nyquist(),
                self.f_min,
                f_max
            ));
        }
        Ok(())
    }
}
