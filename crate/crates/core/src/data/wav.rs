use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Incremental reader over a mono 16-bit PCM or 32-bit float WAV file.
pub struct WavStream {
    reader: hound::WavReader<BufReader<File>>,
    path: PathBuf,
    float: bool,
}

impl WavStream {
    pub fn open(path: &Path) -> Result<Self> {
        let reader = hound::WavReader::open(path).map_err(|e| Error::format(path, e.to_string()))?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::format(path, format!("expected mono audio, found {} channels", spec.channels)));
        }
        let float = match (spec.sample_format, spec.bits_per_sample) {
            (SampleFormat::Int, 16) => false,
            (SampleFormat::Float, 32) => true,
            (fmt, bits) => {
                return Err(Error::format(
                    path,
                    format!("unsupported sample format {fmt:?} with {bits} bits (need 16-bit PCM or 32-bit float)"),
                ))
            }
        };
        Ok(Self {
            reader,
            path: path.to_path_buf(),
            float,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.reader.spec().sample_rate
    }

    /// Samples not yet read.
    pub fn remaining(&self) -> usize {
        self.reader.len() as usize
    }

    /// Up to `max` further samples; empty once the file is exhausted.
    /// PCM is scaled by `1/32768`.
    pub fn read_chunk<T: Scalar>(&mut self, max: usize) -> Result<Vec<T>> {
        let wrap = |e: hound::Error| Error::format(&self.path, e.to_string());
        let out: std::result::Result<Vec<T>, _> = if self.float {
            self.reader.samples::<f32>().take(max).map(|s| s.map(|v| T::lit(v as f64))).collect()
        } else {
            self.reader
                .samples::<i16>()
                .take(max)
                .map(|s| s.map(|v| T::lit(v as f64 / 32768.0)))
                .collect()
        };
        let out = out.map_err(wrap)?;
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(&self.path, format!("sample {i} of chunk is not finite")));
        }
        Ok(out)
    }
}

/// Reads a whole mono 16-bit PCM or 32-bit float WAV file; PCM is scaled by `1/32768`.
pub fn read_wav<T: Scalar>(path: &Path) -> Result<AudioBuffer<T>> {
    let mut stream = WavStream::open(path)?;
    let samples = stream.read_chunk(stream.remaining())?;
    AudioBuffer::new(samples, stream.sample_rate()).map_err(|e| Error::format(path, e.to_string()))
}

fn writer(path: &Path, sample_rate: u32, float: bool) -> Result<WavWriter<std::io::BufWriter<std::fs::File>>> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: if float { 32 } else { 16 },
        sample_format: if float { SampleFormat::Float } else { SampleFormat::Int },
    };
    WavWriter::create(path, spec).map_err(|e| Error::format(path, e.to_string()))
}

/// 16-bit PCM, clipping to the representable range.
pub fn write_wav_pcm16<T: Scalar>(path: &Path, audio: &AudioBuffer<T>) -> Result<()> {
    let wrap = |e: hound::Error| Error::format(path, e.to_string());
    let mut w = writer(path, audio.sample_rate, false)?;
    for &s in &audio.samples {
        let v = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}

pub fn write_wav_f32<T: Scalar>(path: &Path, audio: &AudioBuffer<T>) -> Result<()> {
    let wrap = |e: hound::Error| Error::format(path, e.to_string());
    let mut w = writer(path, audio.sample_rate, true)?;
    for &s in &audio.samples {
        w.write_sample(s.as_f64() as f32).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}
