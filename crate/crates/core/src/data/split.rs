use rand::seq::SliceRandom;

use crate::data::{DrivingEvent, EventLabel};
use crate::dsp::{MfccExtractor, MfccSequence, PreprocessConfig, StackMode};
use crate::dsp::stack_sequences;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

pub const TRAIN_FRACTION: f64 = 0.8;

/// Events divided into training and test sets.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<DrivingEvent<T>>,
    pub test_normal: Vec<DrivingEvent<T>>,
    pub test_abnormal: Vec<DrivingEvent<T>>,
}

/// Sequences derived from a [`DatasetSplit`], event by event.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceSplit<T> {
    pub train: Vec<MfccSequence<T>>,
    pub test_normal: Vec<MfccSequence<T>>,
    pub test_abnormal: Vec<MfccSequence<T>>,
}

/// Shuffles the dry events with `seed` and sends the first
/// `⌊fraction · n_dry⌋` to training; every wet event is an abnormal test event.
pub fn split_dataset<T>(events: Vec<DrivingEvent<T>>, fraction: f64, seed: u64) -> Result<DatasetSplit<T>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("train fraction {fraction} outside [0, 1]")));
    }
    let (mut dry, wet): (Vec<_>, Vec<_>) = events.into_iter().partition(|e| e.label == EventLabel::Dry);
    if dry.len() < 2 {
        return Err(Error::Empty("need at least 2 dry events to split"));
    }
    dry.shuffle(&mut seeded(seed));
    let n_train = (fraction * dry.len() as f64).floor() as usize;
    let test_normal = dry.split_off(n_train);
    Ok(DatasetSplit {
        train: dry,
        test_normal,
        test_abnormal: wet,
    })
}

impl<T: Scalar> DatasetSplit<T> {
    /// Preprocesses each event separately so no sequence spans two events.
    pub fn sequences(&self, cfg: &PreprocessConfig, mode: StackMode) -> Result<SequenceSplit<T>> {
        let mut extractor = MfccExtractor::new(cfg)?;
        let mut convert = |events: &[DrivingEvent<T>]| -> Result<Vec<MfccSequence<T>>> {
            let mut out = Vec::new();
            for e in events {
                let vectors = extractor.vectors(&e.audio)?;
                out.extend(stack_sequences(&vectors, cfg, mode, &e.source_id, e.start)?);
            }
            Ok(out)
        };
        Ok(SequenceSplit {
            train: convert(&self.train)?,
            test_normal: convert(&self.test_normal)?,
            test_abnormal: convert(&self.test_abnormal)?,
        })
    }
}
