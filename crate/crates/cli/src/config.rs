//! Flat `key = value` run configuration shared by every subcommand.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncae::data::{EventParams, SynthConfig, TRAIN_FRACTION};
use ncae::dsp::{PreprocessConfig, StackMode};
use ncae::models::ModelKind;
use ncae::training::{GridSpec, TrainConfig};

use crate::CliError;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub corpus: PathBuf,
    /// Sequence cache written by `preprocess`; when unset, commands
    /// preprocess `corpus` on the fly.
    pub data: Option<PathBuf>,
    pub model: PathBuf,
    pub input: Option<String>,
    pub out: Option<PathBuf>,
    pub preprocess: PreprocessConfig,
    pub stack_mode: StackMode,
    pub events: EventParams,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub model_kind: ModelKind,
    pub train: TrainConfig,
    pub grid: GridSpec,
    pub runs: usize,
    pub seeds: Option<Vec<u64>>,
    pub synth: SynthConfig,
    pub gate_rms: f64,
    pub realtime: bool,
    pub sigma_multiplier: Option<f64>,
    pub queue_len: usize,
    pub chunk_ms: u32,
    pub index: Option<usize>,
    pub error_floor: f64,
    pub csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus"),
            data: None,
            model: PathBuf::from("model"),
            input: None,
            out: None,
            preprocess: PreprocessConfig::default(),
            stack_mode: StackMode::Tumbling,
            events: EventParams::default(),
            train_fraction: TRAIN_FRACTION,
            split_seed: 0,
            model_kind: ModelKind::Ncae,
            train: TrainConfig::default(),
            grid: GridSpec::default(),
            runs: 5,
            seeds: None,
            synth: SynthConfig::default(),
            gate_rms: 0.01,
            realtime: false,
            sigma_multiplier: None,
            queue_len: 64,
            chunk_ms: 250,
            index: None,
            error_floor: ncae::eval::ERROR_MAP_FLOOR,
            csv: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid value '{value}' for key '{key}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value '{value}' for key '{key}': expected true or false"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_range(key: &str, value: &str) -> Result<(f64, f64), CliError> {
    match parse_list::<f64>(key, value)?[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(CliError::Usage(format!("key '{key}' takes two comma-separated numbers"))),
    }
}

fn optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    if value.eq_ignore_ascii_case(none) {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Every accepted key, for help text and error messages.
    pub const KEYS: &'static [&'static str] = &[
        "corpus", "data", "model", "input", "out",
        "sample_rate", "window_len", "hop_len", "n_mels", "stack_len", "segment_ms", "segment_hop_ms",
        "apply_dct", "log_floor", "f_min", "f_max", "stack_mode",
        "event_threshold", "event_relative_threshold", "event_window_s", "event_min_gap_s", "event_min_len_s",
        "train_fraction", "split_seed",
        "model_kind", "learning_rate", "kernel", "batch_size", "max_epochs", "patience", "min_delta", "seed", "shuffle",
        "learning_rates", "kernels", "runs", "seeds",
        "synth_seed", "n_dry", "n_wet", "min_duration_s", "max_duration_s", "padding_s", "background_level",
        "peak_level", "dry_cutoff_hz", "hum_hz", "hum_harmonics", "hum_mix", "wet_cutoff_hz", "wet_level",
        "gate_rms", "realtime", "sigma_multiplier", "queue_len", "chunk_ms",
        "index", "error_floor", "csv",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let p = &mut self.preprocess;
        let t = &mut self.train;
        let s = &mut self.synth;
        let e = &mut self.events;
        match key {
            "corpus" => self.corpus = PathBuf::from(v),
            "data" => self.data = Some(PathBuf::from(v)),
            "model" => self.model = PathBuf::from(v),
            "input" => self.input = Some(v.to_string()),
            "out" => self.out = Some(PathBuf::from(v)),
            "sample_rate" => {
                p.sample_rate = parse(key, v)?;
                s.sample_rate = p.sample_rate;
            }
            "window_len" => p.window_len = parse(key, v)?,
            "hop_len" => p.hop_len = parse(key, v)?,
            "n_mels" => p.n_mels = parse(key, v)?,
            "stack_len" => p.stack_len = parse(key, v)?,
            "segment_ms" => p.segment_ms = parse(key, v)?,
            "segment_hop_ms" => p.segment_hop_ms = parse(key, v)?,
            "apply_dct" => p.apply_dct = parse_bool(key, v)?,
            "log_floor" => p.log_floor = parse(key, v)?,
            "f_min" => p.f_min = parse(key, v)?,
            "f_max" => p.f_max = optional(key, v, "nyquist")?,
            "stack_mode" => {
                self.stack_mode = match v {
                    "tumbling" => StackMode::Tumbling,
                    "sliding" => StackMode::Sliding,
                    _ => return Err(CliError::Usage(format!("invalid value '{v}' for key 'stack_mode': expected tumbling or sliding"))),
                }
            }
            "event_threshold" => e.threshold = optional(key, v, "auto")?,
            "event_relative_threshold" => e.relative_threshold = parse(key, v)?,
            "event_window_s" => e.window_s = parse(key, v)?,
            "event_min_gap_s" => e.min_gap_s = parse(key, v)?,
            "event_min_len_s" => e.min_len_s = parse(key, v)?,
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "split_seed" => self.split_seed = parse(key, v)?,
            "model_kind" => self.model_kind = v.parse().map_err(|e: ncae::Error| CliError::Usage(e.to_string()))?,
            "learning_rate" => t.learning_rate = parse(key, v)?,
            "kernel" => t.kernel = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "max_epochs" => t.max_epochs = parse(key, v)?,
            "patience" => t.patience = parse(key, v)?,
            "min_delta" => t.min_delta = parse(key, v)?,
            "seed" => t.seed = parse(key, v)?,
            "shuffle" => t.shuffle = parse_bool(key, v)?,
            "learning_rates" => self.grid.learning_rates = parse_list(key, v)?,
            "kernels" => self.grid.kernels = parse_list(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "seeds" => self.seeds = Some(parse_list(key, v)?),
            "synth_seed" => s.seed = parse(key, v)?,
            "n_dry" => s.n_dry = parse(key, v)?,
            "n_wet" => s.n_wet = parse(key, v)?,
            "min_duration_s" => s.min_duration_s = parse(key, v)?,
            "max_duration_s" => s.max_duration_s = parse(key, v)?,
            "padding_s" => s.padding_s = parse(key, v)?,
            "background_level" => s.background_level = parse(key, v)?,
            "peak_level" => s.peak_level = parse(key, v)?,
            "dry_cutoff_hz" => s.dry_cutoff_hz = parse_range(key, v)?,
            "hum_hz" => s.hum_hz = parse_range(key, v)?,
            "hum_harmonics" => s.hum_harmonics = parse(key, v)?,
            "hum_mix" => s.hum_mix = parse(key, v)?,
            "wet_cutoff_hz" => s.wet_cutoff_hz = parse_range(key, v)?,
            "wet_level" => s.wet_level = parse(key, v)?,
            "gate_rms" => self.gate_rms = parse(key, v)?,
            "realtime" => self.realtime = parse_bool(key, v)?,
            "sigma_multiplier" => self.sigma_multiplier = optional(key, v, "none")?,
            "queue_len" => self.queue_len = parse(key, v)?,
            "chunk_ms" => self.chunk_ms = parse(key, v)?,
            "index" => self.index = optional(key, v, "all")?,
            "error_floor" => self.error_floor = parse(key, v)?,
            "csv" => self.csv = parse_bool(key, v)?,
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown config key '{key}'; valid keys: {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected 'key = value'", path.display(), n + 1))
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                CliError::Usage(msg) => CliError::Usage(format!("{}:{}: {msg}", path.display(), n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies `--key value` / `--key=value` pairs. A key followed by another
    /// `--key` or by nothing is set to `true`.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(body) = arg.strip_prefix("--") else {
                return Err(CliError::Usage(format!("unexpected argument '{arg}' (overrides look like --key value)")));
            };
            let (key, value) = match body.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => match args.get(i + 1) {
                    Some(next) if !next.starts_with("--") => {
                        i += 1;
                        (body.to_string(), next.clone())
                    }
                    _ => (body.to_string(), "true".to_string()),
                },
            };
            self.set(&key.replace('-', "_"), &value)?;
            i += 1;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: ncae::Error| CliError::Usage(e.to_string());
        self.preprocess.validate().map_err(usage)?;
        self.train.validate().map_err(usage)?;
        if !(self.train.learning_rate > 0.0) {
            return Err(CliError::Usage("learning_rate must be positive".into()));
        }
        self.synth.validate().map_err(usage)?;
        if self.synth.sample_rate != self.preprocess.sample_rate {
            return Err(CliError::Usage("synth and preprocessing sample rates differ".into()));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(CliError::Usage("train_fraction must lie in [0, 1]".into()));
        }
        if self.grid.learning_rates.iter().any(|&lr| !(lr > 0.0)) {
            return Err(CliError::Usage("learning_rates must all be positive".into()));
        }
        if let Some(k) = self.grid.kernels.iter().find(|&&k| k % 2 == 0) {
            return Err(CliError::Usage(format!("kernel must be odd, got {k}")));
        }
        if self.queue_len == 0 || self.chunk_ms == 0 {
            return Err(CliError::Usage("queue_len and chunk_ms must be positive".into()));
        }
        if !(self.error_floor > 0.0) {
            return Err(CliError::Usage("error_floor must be positive".into()));
        }
        if !(self.gate_rms >= 0.0) {
            return Err(CliError::Usage("gate_rms must be non-negative".into()));
        }
        Ok(())
    }
}
