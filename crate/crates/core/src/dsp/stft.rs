use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dsp::PreprocessConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Magnitude spectrogram stored bin-major: `magnitudes[bin * frames + frame]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram<T> {
    pub magnitudes: Vec<T>,
    pub bins: usize,
    pub frames: usize,
    /// Start time of each frame in seconds, relative to the segment.
    pub frame_times: Vec<f64>,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn get(&self, bin: usize, frame: usize) -> T {
        self.magnitudes[bin * self.frames + frame]
    }

    pub fn frame(&self, frame: usize) -> Vec<T> {
        (0..self.bins).map(|b| self.get(b, frame)).collect()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            T::lit(0.5 - 0.5 * phase.cos())
        })
        .collect()
}

/// Reusable FFT plan and window for one framing configuration.
pub struct StftPlan<T: Scalar> {
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    hop: usize,
    sample_rate: u32,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> StftPlan<T> {
    pub fn new(cfg: &PreprocessConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.window_len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        Self {
            buffer: vec![Complex::new(T::zero(), T::zero()); cfg.window_len],
            window: hann_window(cfg.window_len),
            hop: cfg.hop_len,
            sample_rate: cfg.sample_rate,
            fft,
            scratch,
        }
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Hann-windowed magnitudes of non-centred frames, `1 + (len - W) / H` of them.
    pub fn process(&mut self, segment: &[T]) -> Result<Spectrogram<T>> {
        let w = self.window.len();
        if segment.len() < w {
            return Err(Error::SegmentTooShort {
                len: segment.len(),
                window: w,
            });
        }
        let frames = 1 + (segment.len() - w) / self.hop;
        let bins = w / 2 + 1;
        let mut magnitudes = vec![T::zero(); bins * frames];
        for f in 0..frames {
            let start = f * self.hop;
            for ((c, &x), &win) in self
                .buffer
                .iter_mut()
                .zip(&segment[start..start + w])
                .zip(&self.window)
            {
                *c = Complex::new(x * win, T::zero());
            }
            self.fft
                .process_with_scratch(&mut self.buffer, &mut self.scratch);
            for (b, c) in self.buffer[..bins].iter().enumerate() {
                magnitudes[b * frames + f] = c.norm();
            }
        }
        let frame_times = (0..frames)
            .map(|f| (f * self.hop) as f64 / self.sample_rate as f64)
            .collect();
        Ok(Spectrogram {
            magnitudes,
            bins,
            frames,
            frame_times,
        })
    }
}

/// One-shot STFT of a segment; plan once with [`StftPlan`] for repeated use.
pub fn stft<T: Scalar>(segment: &[T], cfg: &PreprocessConfig) -> Result<Spectrogram<T>> {
    StftPlan::new(cfg).process(segment)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(W²) DFT magnitude of one Hann-windowed frame.
    fn direct_dft(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let win = hann_window::<f64>(n);
        (0..n / 2 + 1)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, (&x, &w)) in frame.iter().zip(&win).enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                    re += x * w * ang.cos();
                    im += x * w * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn sine(freq: f64, rate: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn half_second_segment_has_forty_frames() {
        let cfg = PreprocessConfig::default();
        let spec = stft(&vec![0.0f64; 22_050], &cfg).unwrap();
        assert_eq!((spec.frames, spec.bins), (40, 1025));
        assert!(spec.magnitudes.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn short_segment_is_an_error() {
        let cfg = PreprocessConfig::default();
        let err = stft(&vec![0.0f64; 2047], &cfg).unwrap_err();
        assert!(err.to_string().contains("segment too short"));
    }

    #[test]
    fn sinusoid_peaks_at_its_bin() {
        let cfg = PreprocessConfig::default();
        let f = 100.0 * cfg.sample_rate as f64 / cfg.window_len as f64;
        let x = sine(f, cfg.sample_rate as f64, 22_050);
        let spec = stft(&x, &cfg).unwrap();
        for fr in 0..spec.frames {
            let col = spec.frame(fr);
            let argmax = (0..col.len())
                .max_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap())
                .unwrap();
            assert_eq!(argmax, 100);
        }
    }

    #[test]
    fn fft_matches_direct_dft() {
        let cfg = PreprocessConfig {
            window_len: 256,
            hop_len: 64,
            segment_ms: 10,
            sample_rate: 44_100,
            ..Default::default()
        };
        let x: Vec<f64> = (0..441).map(|i| ((i * i) as f64 * 0.001).sin()).collect();
        let spec = stft(&x, &cfg).unwrap();
        for fr in 0..spec.frames {
            let want = direct_dft(&x[fr * 64..fr * 64 + 256]);
            for (a, b) in spec.frame(fr).iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_energy_follows_parseval() {
        let cfg = PreprocessConfig::default();
        let w = cfg.window_len;
        let x = sine(1234.5, cfg.sample_rate as f64, 22_050);
        let spec = stft(&x, &cfg).unwrap();
        let win = hann_window::<f64>(w);
        for fr in [0, 17, 39] {
            let seg = &x[fr * cfg.hop_len..fr * cfg.hop_len + w];
            let time_energy: f64 = seg.iter().zip(&win).map(|(a, b)| (a * b).powi(2)).sum();
            let col = spec.frame(fr);
            // one-sided spectrum: DC and Nyquist once, every other bin twice
            let mut spec_energy = col[0].powi(2) + col[w / 2].powi(2);
            spec_energy += 2.0 * col[1..w / 2].iter().map(|m| m * m).sum::<f64>();
            let predicted = w as f64 * time_energy;
            assert!((spec_energy - predicted).abs() / predicted < 0.01);
        }
    }
}
