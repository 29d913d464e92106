//! Command-line pipeline: synthesize bodies, measure and render them, then
//! train, evaluate and report with k-fold cross-validation.

pub mod config;
mod data;
mod learn;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{failed} of {total} records failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

impl From<anthropometer_experiment::ExperimentError> for CliError {
    fn from(e: anthropometer_experiment::ExperimentError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<anthropometer_neural::NeuralError> for CliError {
    fn from(e: anthropometer_neural::NeuralError) -> Self {
        CliError::Data(e.to_string())
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub(crate) fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

/// The block embedded in every output artifact.
pub(crate) fn provenance(command: &str, config: Value, seed: u64, input_sha256: &str) -> Value {
    json!({
        "command": command,
        "config": config,
        "seed": seed,
        "input_sha256": input_sha256,
    })
}

pub(crate) fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Refuses to write into a non-empty directory unless forced.
pub(crate) fn check_out_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    match std::fs::read_dir(dir).map(|mut entries| entries.next().is_some()) {
        Ok(true) if !force => Err(CliError::Usage(format!(
            "output directory {} is not empty (use --force to write into it)",
            dir.display()
        ))),
        Ok(_) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(io_err(dir, e)),
    }
}

pub(crate) fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} does not exist or is not a file", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "anthropometer", version, about = "Body-dimension estimation from synthetic silhouettes")]
pub struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-subject work and fold training.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate procedural subjects in both poses with a manifest.
    Synth {
        /// Number of subjects; each gives two meshes.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Measure the eight dimensions of every manifest record.
    Measure {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render every manifest record to a grayscale PGM.
    Render {
        #[arg(long)]
        manifest: PathBuf,
        /// Image side in pixels.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// K-fold training; writes checkpoints, results and a report.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Re-evaluates a training run's checkpoints on its folds.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuilds the report from persisted results.
    Report {
        /// Directory holding results.bin, baseline.bin and split.json.
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Clone, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub stratified: bool,
}

/// Runs one command. Informational output goes to stdout, progress and
/// per-record failures to stderr.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth { n, seed, out, force } => {
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.validate()?;
            data::synth(&cfg, n, &out, force)
        }
        Command::Measure { manifest } => {
            cfg.validate()?;
            data::measure(&cfg, &manifest)
        }
        Command::Render { manifest, resolution } => {
            cfg.camera.resolution = resolution.unwrap_or(cfg.camera.resolution);
            cfg.validate()?;
            data::render(&cfg, &manifest)
        }
        Command::Train {
            manifest,
            out,
            force,
            flags,
        } => {
            cfg.apply(&flags);
            cfg.validate()?;
            learn::train(&cfg, &manifest, &out, force)
        }
        Command::Eval { manifest, run, out } => learn::eval(&manifest, &run, out.as_deref().unwrap_or(&run)),
        Command::Report { run, out } => learn::report(&run, out.as_deref().unwrap_or(&run)),
    }
}
