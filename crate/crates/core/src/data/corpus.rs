use std::fs;
use std::path::Path;

use crate::data::{extract_events, read_wav, split_dataset, DrivingEvent, EventLabel, EventParams, SequenceSplit, CORPUS_MANIFEST};
use crate::dsp::{PreprocessConfig, StackMode};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A labelled file listed in a corpus manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub file: String,
    pub label: EventLabel,
}

/// Parses `manifest.csv`; only the `file` and `label` columns are used.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::format(path, e.to_string()))?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split(',').map(str::trim).collect(),
        None => return Err(Error::format(path, "empty manifest")),
    };
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::format(path, format!("manifest lacks a '{name}' column")))
    };
    let (fi, li) = (col("file")?, col("label")?);
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| {
            fields
                .get(i)
                .copied()
                .ok_or_else(|| Error::format(path, format!("line {}: too few fields", n + 1)))
        };
        out.push(ManifestEntry {
            file: get(fi)?.to_string(),
            label: get(li)?
                .parse()
                .map_err(|e: Error| Error::format(path, format!("line {}: {e}", n + 1)))?,
        });
    }
    Ok(out)
}

/// Reads every manifest-listed recording under `dir` and extracts its events.
pub fn load_corpus<T: Scalar>(dir: &Path, params: &EventParams) -> Result<Vec<DrivingEvent<T>>> {
    let entries = read_manifest(&dir.join(CORPUS_MANIFEST))?;
    let mut events = Vec::new();
    for e in entries {
        let audio = read_wav::<T>(&dir.join(&e.file))?;
        let stem = e.file.trim_end_matches(".wav");
        events.extend(extract_events(&audio, params, e.label, stem)?);
    }
    Ok(events)
}

/// Corpus directory → event split → per-event sequences.
pub fn prepare_sequences<T: Scalar>(
    dir: &Path,
    params: &EventParams,
    preprocess: &PreprocessConfig,
    mode: StackMode,
    train_fraction: f64,
    split_seed: u64,
) -> Result<SequenceSplit<T>> {
    let events = load_corpus::<T>(dir, params)?;
    split_dataset(events, train_fraction, split_seed)?.sequences(preprocess, mode)
}
