//! Labelled synthetic pass-by recordings standing in for a road-noise corpus.
//!
//! A dry event is low-passed noise plus an engine-like harmonic hum whose
//! pitch drifts down as the vehicle passes. A wet event adds high-passed
//! broadband noise (tyre spray) on top. Both are shaped by a rise-and-fall
//! envelope and padded with faint background noise.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{write_wav_pcm16, EventLabel};
use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

pub const CORPUS_MANIFEST: &str = "manifest.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_dry: usize,
    pub n_wet: usize,
    pub sample_rate: u32,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Background-only audio before and after each event.
    pub padding_s: f64,
    pub background_level: f64,
    /// Peak amplitude of the event envelope.
    pub peak_level: f64,
    /// Range of the dry low-pass cutoff in Hz.
    pub dry_cutoff_hz: (f64, f64),
    /// Range of the hum fundamental in Hz.
    pub hum_hz: (f64, f64),
    pub hum_harmonics: usize,
    /// Share of the dry signal RMS given to the hum.
    pub hum_mix: f64,
    /// Range of the wet high-pass cutoff in Hz.
    pub wet_cutoff_hz: (f64, f64),
    /// Spray RMS relative to the dry signal RMS.
    pub wet_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_dry: 38,
            n_wet: 27,
            sample_rate: 44_100,
            min_duration_s: 8.5,
            max_duration_s: 16.0,
            padding_s: 1.0,
            background_level: 1e-3,
            peak_level: 0.5,
            dry_cutoff_hz: (800.0, 1800.0),
            hum_hz: (50.0, 120.0),
            hum_harmonics: 6,
            hum_mix: 0.3,
            wet_cutoff_hz: (4500.0, 6000.0),
            wet_level: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.sample_rate == 0 {
            return Err(Error::config("synth sample_rate must be positive"));
        }
        if !(self.min_duration_s > 0.0 && self.min_duration_s <= self.max_duration_s) {
            return Err(Error::config("synth durations must satisfy 0 < min ≤ max"));
        }
        for (name, (lo, hi)) in [
            ("dry_cutoff_hz", self.dry_cutoff_hz),
            ("hum_hz", self.hum_hz),
            ("wet_cutoff_hz", self.wet_cutoff_hz),
        ] {
            if !(lo > 0.0 && lo <= hi && hi < nyquist) {
                return Err(Error::config(format!("{name} must lie in (0, Nyquist) with low ≤ high")));
            }
        }
        if !(0.0..=1.0).contains(&self.hum_mix) || self.wet_level < 0.0 || self.padding_s < 0.0 {
            return Err(Error::config("synth levels out of range"));
        }
        Ok(())
    }
}

/// One generated recording.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthEvent {
    pub file: String,
    pub label: EventLabel,
    pub audio: AudioBuffer<f64>,
    /// Event boundaries in seconds within the file.
    pub start: f64,
    pub end: f64,
}

/// Direct-form I biquad.
#[derive(Clone, Copy, Debug)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn new(high_pass: bool, cutoff: f64, q: f64, rate: f64) -> Self {
        let w = 2.0 * PI * cutoff / rate;
        let alpha = w.sin() / (2.0 * q);
        let cos = w.cos();
        let a0 = 1.0 + alpha;
        let b = if high_pass {
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0]
        } else {
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0]
        };
        Self {
            b: b.map(|v| v / a0),
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                (x2, x1, y2, y1) = (x1, v, y1, y);
                y
            })
            .collect()
    }
}

/// Fourth-order Butterworth as two cascaded biquads.
fn butterworth4(x: &[f64], high_pass: bool, cutoff: f64, rate: f64) -> Vec<f64> {
    let first = Biquad::new(high_pass, cutoff, 0.541_196_100_146_197, rate);
    let second = Biquad::new(high_pass, cutoff, 1.306_562_964_876_376_6, rate);
    second.run(&first.run(x))
}

fn white(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

fn scaled(x: &[f64], target_rms: f64) -> Vec<f64> {
    let r = rms(x);
    let g = if r > 0.0 { target_rms / r } else { 0.0 };
    x.iter().map(|v| v * g).collect()
}

fn event_seed(base: u64, label: EventLabel, index: usize) -> u64 {
    let tag = match label {
        EventLabel::Dry => 0x0D5E_ED00_0000_0000,
        EventLabel::Wet => 0x0E7E_ED00_0000_0000,
    };
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag ^ index as u64
}

/// Generates one recording. Identical arguments give identical samples.
pub fn synth_event(cfg: &SynthConfig, label: EventLabel, index: usize) -> Result<SynthEvent> {
    cfg.validate()?;
    let mut rng = seeded(event_seed(cfg.seed, label, index));
    let rate = cfg.sample_rate as f64;
    let duration = rng.gen_range(cfg.min_duration_s..=cfg.max_duration_s);
    let n = (duration * rate).round() as usize;

    let cutoff = rng.gen_range(cfg.dry_cutoff_hz.0..=cfg.dry_cutoff_hz.1);
    let body = scaled(&butterworth4(&white(&mut rng, n), false, cutoff, rate), 1.0 - cfg.hum_mix);

    let f0 = rng.gen_range(cfg.hum_hz.0..=cfg.hum_hz.1);
    let sweep = rng.gen_range(0.02..0.06);
    let phases: Vec<f64> = (0..cfg.hum_harmonics).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let mut phase = 0.0;
    let hum_raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            // Doppler: pitch above nominal on approach, below when receding.
            phase += 2.0 * PI * f0 * (1.0 + sweep * (PI * t).cos()) / rate;
            phases
                .iter()
                .enumerate()
                .map(|(h, p)| ((h + 1) as f64 * phase + p).sin() / (h + 1) as f64)
                .sum()
        })
        .collect();
    let hum = scaled(&hum_raw, cfg.hum_mix);
    let mut signal: Vec<f64> = body.iter().zip(&hum).map(|(a, b)| a + b).collect();

    if label == EventLabel::Wet {
        let wet_cut = rng.gen_range(cfg.wet_cutoff_hz.0..=cfg.wet_cutoff_hz.1);
        let spray = scaled(
            &butterworth4(&white(&mut rng, n), true, wet_cut, rate),
            cfg.wet_level * rms(&signal),
        );
        for (s, w) in signal.iter_mut().zip(spray) {
            *s += w;
        }
    }

    let fade = (0.05 * rate) as usize;
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { cfg.peak_level / peak } else { 0.0 };
    for (i, s) in signal.iter_mut().enumerate() {
        let t = i as f64 / n as f64;
        let mut env = 0.35 + 0.65 * (PI * t).sin();
        let edge = i.min(n - 1 - i);
        if edge < fade {
            env *= edge as f64 / fade as f64;
        }
        *s *= gain * env;
    }

    let pad = (cfg.padding_s * rate).round() as usize;
    let mut samples = white(&mut rng, n + 2 * pad);
    for v in samples.iter_mut() {
        *v *= cfg.background_level;
    }
    for (dst, src) in samples[pad..pad + n].iter_mut().zip(&signal) {
        *dst += src;
    }
    Ok(SynthEvent {
        file: format!("{label}_{index:03}.wav"),
        label,
        audio: AudioBuffer::new(samples, cfg.sample_rate)?,
        start: pad as f64 / rate,
        end: (pad + n) as f64 / rate,
    })
}

/// Writes every recording as 16-bit PCM plus `manifest.csv`
/// (`file,label,start,end,duration`). Returns the written WAV paths.
pub fn synth_generate(cfg: &SynthConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = String::from("file,label,start,end,duration\n");
    let mut paths = Vec::new();
    let jobs = (0..cfg.n_dry)
        .map(|i| (EventLabel::Dry, i))
        .chain((0..cfg.n_wet).map(|i| (EventLabel::Wet, i)));
    for (label, i) in jobs {
        let ev = synth_event(cfg, label, i)?;
        let path = out_dir.join(&ev.file);
        write_wav_pcm16(&path, &ev.audio)?;
        let _ = writeln!(
            manifest,
            "{},{},{:.6},{:.6},{:.6}",
            ev.file,
            ev.label,
            ev.start,
            ev.end,
            ev.end - ev.start
        );
        paths.push(path);
    }
    fs::write(out_dir.join(CORPUS_MANIFEST), manifest)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_dry: 2,
            n_wet: 1,
            min_duration_s: 1.0,
            max_duration_s: 1.5,
            padding_s: 0.2,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = synth_generate(&small(), a.path()).unwrap();
        let pb = synth_generate(&small(), b.path()).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        assert_eq!(
            fs::read(a.path().join(CORPUS_MANIFEST)).unwrap(),
            fs::read(b.path().join(CORPUS_MANIFEST)).unwrap()
        );
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let paths = synth_generate(&small(), &dir.path().join("nested/out")).unwrap();
        assert_eq!(paths.len(), 3);
        let text = fs::read_to_string(dir.path().join("nested/out").join(CORPUS_MANIFEST)).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "file,label,start,end,duration");
        assert!(lines[3].starts_with("wet_000.wav,wet,0.200000,"));
    }

    #[test]
    fn butterworth_attenuates_out_of_band() {
        let rate = 44_100.0;
        let n = 44_100;
        let tone = |f: f64| (0..n).map(|i| (2.0 * PI * f * i as f64 / rate).sin()).collect::<Vec<_>>();
        let settled = |x: Vec<f64>| rms(&x[n / 2..]);
        assert!(settled(butterworth4(&tone(200.0), false, 1000.0, rate)) > 0.69);
        assert!(settled(butterworth4(&tone(8000.0), false, 1000.0, rate)) < 1e-3);
        assert!(settled(butterworth4(&tone(8000.0), true, 4000.0, rate)) > 0.69);
        assert!(settled(butterworth4(&tone(500.0), true, 4000.0, rate)) < 1e-3);
        // -3 dB at the cutoff.
        let at = settled(butterworth4(&tone(1000.0), false, 1000.0, rate));
        assert!((at - 0.5).abs() < 0.01, "{at}");
    }

    #[test]
    fn event_bounds_and_levels() {
        let cfg = small();
        let ev = synth_event(&cfg, EventLabel::Dry, 0).unwrap();
        assert!((ev.start - 0.2).abs() < 1e-9);
        let d = ev.end - ev.start;
        assert!((1.0..=1.5 + 1e-9).contains(&d));
        let peak = ev.audio.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 0.5 + 2e-3);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SynthConfig { hum_hz: (0.0, 10.0), ..small() };
        assert!(synth_event(&cfg, EventLabel::Dry, 0).is_err());
    }
}
