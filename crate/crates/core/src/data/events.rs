use serde::{Deserialize, Serialize};

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventLabel {
    Dry,
    Wet,
}

impl std::fmt::Display for EventLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventLabel::Dry => "dry",
            EventLabel::Wet => "wet",
        })
    }
}

impl std::str::FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dry" => Ok(EventLabel::Dry),
            "wet" => Ok(EventLabel::Wet),
            other => Err(Error::config(format!("unknown event label '{other}' (expected dry or wet)"))),
        }
    }
}

/// A region of a recording where pass-by noise exceeds the envelope threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingEvent<T> {
    pub audio: AudioBuffer<T>,
    /// Seconds from the start of the source recording.
    pub start: f64,
    pub end: f64,
    pub label: EventLabel,
    pub source_id: String,
}

impl<T> DrivingEvent<T> {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    /// Absolute RMS threshold; `None` uses `relative_threshold` × the 95th
    /// percentile of the recording's envelope.
    pub threshold: Option<f64>,
    pub relative_threshold: f64,
    /// Envelope block length in seconds.
    pub window_s: f64,
    /// Regions separated by less than this are merged.
    pub min_gap_s: f64,
    /// Regions shorter than this are dropped.
    pub min_len_s: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        Self {
            threshold: None,
            relative_threshold: 0.2,
            window_s: 0.05,
            min_gap_s: 0.5,
            min_len_s: 1.0,
        }
    }
}

/// RMS of consecutive non-overlapping blocks of `window` samples; a trailing
/// partial block is included.
pub fn rms_envelope<T: Scalar>(samples: &[T], window: usize) -> Vec<f64> {
    samples
        .chunks(window.max(1))
        .map(|b| (b.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>() / b.len() as f64).sqrt())
        .collect()
}

/// Nearest-rank percentile, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Sample ranges `[start, end)` of the detected events.
pub fn event_ranges<T: Scalar>(audio: &AudioBuffer<T>, params: &EventParams) -> Result<Vec<(usize, usize)>> {
    let rate = audio.sample_rate as f64;
    let window = (params.window_s * rate).round() as usize;
    if window == 0 {
        return Err(Error::config("event envelope window is shorter than one sample"));
    }
    let env = rms_envelope(&audio.samples, window);
    let threshold = match params.threshold {
        Some(t) => t,
        None => params.relative_threshold * percentile(&env, 0.95),
    };
    if !(threshold > 0.0) {
        // Silent recording under a relative threshold.
        if params.threshold.is_none() {
            return Ok(Vec::new());
        }
        return Err(Error::config("event threshold must be positive"));
    }

    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &e) in env.iter().enumerate() {
        match (e > threshold, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                blocks.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        blocks.push((s, env.len()));
    }

    let gap = (params.min_gap_s * rate / window as f64).ceil() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for b in blocks {
        match merged.last_mut() {
            Some(last) if b.0 - last.1 < gap => last.1 = b.1,
            _ => merged.push(b),
        }
    }
    let n = audio.samples.len();
    let min_len = (params.min_len_s * rate).round() as usize;
    Ok(merged
        .into_iter()
        .map(|(a, b)| (a * window, (b * window).min(n)))
        .filter(|(a, b)| b - a >= min_len)
        .collect())
}

/// Splits a recording into labelled driving events.
pub fn extract_events<T: Scalar>(
    audio: &AudioBuffer<T>,
    params: &EventParams,
    label: EventLabel,
    source_id: &str,
) -> Result<Vec<DrivingEvent<T>>> {
    let rate = audio.sample_rate as f64;
    Ok(event_ranges(audio, params)?
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| DrivingEvent {
            audio: audio.slice(a, b),
            start: a as f64 / rate,
            end: b as f64 / rate,
            label,
            source_id: format!("{source_id}#{i}"),
        })
        .collect())
}
