//! Streaming detection: a DSP producer thread feeds MFCC vectors through a
//! bounded channel to the scoring consumer.

use std::fs::File;
use std::io::{self, LineWriter, Read, Write};
use std::path::Path;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use ncae::data::WavStream;
use ncae::dsp::{MfccStream, MfccVector, PreprocessConfig, SequenceWindow};
use ncae::eval::{classify, score, Label};
use ncae::models::{load_model, Autoencoder, MANIFEST_FILE};

use crate::config::RunConfig;
use crate::{CliError, Result};

/// One completed segment: start time, RMS and feature vector.
type Frame = (f64, f64, MfccVector<f64>);

enum Source {
    Wav(WavStream),
    Stdin(io::Stdin, Vec<u8>),
}

impl Source {
    fn open(input: &str, pre: &PreprocessConfig) -> Result<Self> {
        if input == "-" {
            return Ok(Source::Stdin(io::stdin(), Vec::new()));
        }
        let wav = WavStream::open(Path::new(input))?;
        if wav.sample_rate() != pre.sample_rate {
            return Err(ncae::Error::InvalidConfig(format!(
                "{input} is {} Hz but the model expects {} Hz",
                wav.sample_rate(),
                pre.sample_rate
            ))
            .into());
        }
        Ok(Source::Wav(wav))
    }

    /// Next chunk of at most `n` samples; empty at end of stream.
    fn next_chunk(&mut self, n: usize) -> Result<Vec<f64>> {
        match self {
            Source::Wav(w) => Ok(w.read_chunk(n)?),
            Source::Stdin(stdin, carry) => {
                // raw little-endian f32; a trailing partial sample is dropped
                let want = n * 4;
                let mut lock = stdin.lock();
                let mut buf = vec![0u8; want.saturating_sub(carry.len())];
                let mut filled = 0;
                while filled < buf.len() {
                    match lock.read(&mut buf[filled..]) {
                        Ok(0) => break,
                        Ok(k) => filled += k,
                        Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                        Err(e) => return Err(CliError::io("<stdin>")(e)),
                    }
                }
                carry.extend_from_slice(&buf[..filled]);
                let whole = carry.len() / 4 * 4;
                let samples: Vec<f64> = carry[..whole]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                    .collect();
                carry.drain(..whole);
                if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
                    return Err(ncae::Error::Numerical(format!("stdin sample {i} of chunk is not finite")).into());
                }
                Ok(samples)
            }
        }
    }
}

fn produce(mut source: Source, pre: &PreprocessConfig, chunk: usize, realtime: bool, tx: SyncSender<Result<Frame>>) {
    let mut run = || -> Result<()> {
        let mut stream = MfccStream::<f64>::new(pre)?;
        let started = Instant::now();
        let mut sent = 0usize;
        loop {
            let samples = source.next_chunk(chunk)?;
            if samples.is_empty() {
                return Ok(());
            }
            sent += samples.len();
            if realtime {
                let due = Duration::from_secs_f64(sent as f64 / pre.sample_rate as f64);
                if let Some(wait) = due.checked_sub(started.elapsed()) {
                    thread::sleep(wait);
                }
            }
            for frame in stream.push(&samples)? {
                if tx.send(Ok(frame)).is_err() {
                    return Ok(());
                }
            }
        }
    };
    if let Err(e) = run() {
        let _ = tx.send(Err(e));
    }
}

pub fn detect(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("detect needs --input <wav file, or - for raw f32 samples on stdin>".into()))?;
    let (model, manifest) = load_model::<f64>(&cfg.model)?;
    let mut threshold = model.threshold().cloned().ok_or_else(|| ncae::Error::Format {
        path: cfg.model.join(MANIFEST_FILE),
        msg: "model has no stored threshold".into(),
    })?;
    if let Some(m) = cfg.sigma_multiplier {
        threshold = threshold.with_multiplier(m);
    }
    let pre = manifest.preprocess.clone().unwrap_or_else(|| cfg.preprocess.clone());
    if (pre.n_mels, pre.stack_len) != (model.n_features(), model.seq_len()) {
        return Err(ncae::Error::ShapeMismatch(format!(
            "front end yields {}×{} sequences, model expects {}×{}",
            pre.stack_len,
            pre.n_mels,
            model.seq_len(),
            model.n_features()
        ))
        .into());
    }
    let source = Source::open(&input, &pre)?;
    let chunk = (pre.sample_rate as usize * cfg.chunk_ms as usize / 1000).max(1);
    let segment_s = pre.segment_ms as f64 / 1000.0;

    let sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(File::create(path).map_err(CliError::io(path))?),
        None => Box::new(io::stdout()),
    };
    let mut out = LineWriter::new(sink);
    let write_err = |e: io::Error| CliError::io(cfg.out.clone().unwrap_or_else(|| "<stdout>".into()))(e);
    writeln!(out, "time,score,theta,verdict").map_err(write_err)?;

    let (tx, rx) = sync_channel::<Result<Frame>>(cfg.queue_len);
    let (mut windows, mut abnormal) = (0usize, 0usize);
    thread::scope(|scope| -> Result<()> {
        let pre = &pre;
        scope.spawn(move || produce(source, pre, chunk, cfg.realtime, tx));
        let mut window = SequenceWindow::new(pre.stack_len, pre.n_mels);
        for frame in rx {
            let (start, rms, v) = frame?;
            if rms < cfg.gate_rms {
                window.reset();
                continue;
            }
            let Some(seq) = window.push(start, v, &input)? else { continue };
            let s = score(&model, &seq)?;
            let verdict = classify(s, &threshold);
            windows += 1;
            abnormal += usize::from(verdict == Label::Abnormal);
            writeln!(out, "{:.3},{s:.6},{:.6},{verdict}", start + segment_s, threshold.theta).map_err(write_err)?;
        }
        Ok(())
    })?;
    out.flush().map_err(write_err)?;
    eprintln!("{windows} windows scored, {abnormal} abnormal");
    Ok(())
}
