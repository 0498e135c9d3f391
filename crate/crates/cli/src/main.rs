//! `ncae`: synthesize, preprocess, train, sweep, evaluate, profile and
//! stream-detect from one binary.

mod commands;
mod config;
mod detect;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ncae::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 1 usage/config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use ncae::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::TooFewMelBands(_) | E::InconsistentFlops(_) => 1,
                E::Numerical(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ncae", version, about = "Road-noise anomaly detection with a non-compression auto-encoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic corpus of WAV files plus manifest.csv
    Synth(RunArgs),
    /// Cut corpus events into MFCC sequences and cache the train/test split
    Preprocess(RunArgs),
    /// Train a model on normal sequences and store it with its threshold
    Train(RunArgs),
    /// Train and evaluate every learning-rate × kernel cell
    Sweep(RunArgs),
    /// Repeat training over several seeds and summarize test AUROC
    Montecarlo(RunArgs),
    /// Print parameter and FLOPs accounting
    Profile(RunArgs),
    /// Stream a WAV file (or raw f32 samples on stdin) through a trained model
    Detect(RunArgs),
    /// Write reconstruction and log-error maps for cached sequences
    Errormap(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// key = value configuration file, applied before the overrides
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Configuration overrides as `--key value` or `--key=value`
    #[arg(
        value_name = "--KEY VALUE",
        trailing_var_arg = true,
        allow_hyphen_values = true,
        num_args = 0..
    )]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_overrides(&self.overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, f): (&RunArgs, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Synth(a) => (a, commands::synth),
        Command::Preprocess(a) => (a, commands::preprocess),
        Command::Train(a) => (a, commands::train),
        Command::Sweep(a) => (a, commands::sweep),
        Command::Montecarlo(a) => (a, commands::montecarlo),
        Command::Profile(a) => (a, commands::profile),
        Command::Detect(a) => (a, detect::detect),
        Command::Errormap(a) => (a, commands::errormap),
    };
    f(&args.resolve()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_pass_through_clap() {
        let cli = Cli::try_parse_from(["ncae", "train", "--kernel", "5", "--shuffle", "--max-epochs=3"]).unwrap();
        let Command::Train(args) = cli.command else { panic!() };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.train.kernel, cfg.train.max_epochs, cfg.train.shuffle), (5, 3, true));
    }

    #[test]
    fn config_flag_is_not_an_override() {
        let cli = Cli::try_parse_from(["ncae", "profile", "-c", "run.cfg", "--kernels", "3"]).unwrap();
        let Command::Profile(args) = cli.command else { panic!() };
        assert_eq!(args.config.as_deref(), Some(std::path::Path::new("run.cfg")));
        assert_eq!(args.overrides, ["--kernels", "3"]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(ncae::Error::Numerical("nan".into())).exit_code(), 3);
        assert_eq!(CliError::Core(ncae::Error::Empty("x")).exit_code(), 2);
    }
}
