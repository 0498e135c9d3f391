//! WAV ingestion, driving-event extraction, dataset splits, the synthetic
//! corpus generator and the sequence cache format.

mod corpus;
mod events;
mod seqfile;
mod split;
mod synth;
mod wav;

pub use corpus::{load_corpus, prepare_sequences, read_manifest, ManifestEntry};
pub use events::{event_ranges, extract_events, percentile, rms_envelope, DrivingEvent, EventLabel, EventParams};
pub use seqfile::{
    decode_sequences, encode_sequences, read_sequences, sequences_csv, write_sequences, SEQUENCE_MAGIC,
    SEQUENCE_VERSION,
};
pub use split::{split_dataset, DatasetSplit, SequenceSplit, TRAIN_FRACTION};
pub use synth::{synth_event, synth_generate, SynthConfig, SynthEvent, CORPUS_MANIFEST};
pub use wav::{read_wav, write_wav_f32, write_wav_pcm16, WavStream};
