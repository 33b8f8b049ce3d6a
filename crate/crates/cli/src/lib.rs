//! Configuration-driven experiment runner for the `sdrc` library.
//!
//! Every subcommand validates the whole configuration first, computes all of its
//! results in memory, and only then writes them (each file atomically) followed by
//! a `manifest.json`. A failure therefore leaves no partial output behind.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use output::{Artifact, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<sdrc::Error> for CliError {
    fn from(e: sdrc::Error) -> Self {
        match e {
            sdrc::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Labels a library error with the pipeline stage it came from.
pub(crate) fn stage(name: &'static str) -> impl Fn(sdrc::Error) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{name}: {m}")),
        CliError::Runtime(m) => CliError::Runtime(format!("{name}: {m}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdrc", version, about = "Spectral-domain reservoir computing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Replaces every seed in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Print the annotated default configuration and exit.
    #[arg(long)]
    pub print_template: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Drive the reservoir with the task inputs and save every detector response.
    Simulate,
    /// Simulate and save the extracted state matrix.
    Extract,
    /// Simulate, extract, train and score the configured task.
    Benchmark,
    /// Node-subset search at every configured bias field.
    Sweep,
    /// Speaker classification under the repeated-shuffle protocol.
    Speech {
        /// Use the generated multi-tone corpus instead of `speech.wav_dir`.
        #[arg(long)]
        synthetic: bool,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Extract => "extract",
            Command::Benchmark => "benchmark",
            Command::Sweep => "sweep",
            Command::Speech { .. } => "speech",
            Command::Selftest => "selftest",
        }
    }
}

/// Loads the config and applies the command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = Some(dir.clone());
    }
    Ok(cfg)
}

/// Runs one invocation; returns the directory written, if any.
pub fn run(cli: &Cli) -> Result<Option<PathBuf>, CliError> {
    if cli.print_template {
        print!("{}", config::TEMPLATE);
        return Ok(None);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (try --help)".into()));
    };
    let cfg = effective_config(cli)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads: must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| execute(command, &cfg))
}

/// Runs `command` on an already-effective config in the current thread pool.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Option<PathBuf>, CliError> {
    if command == Command::Selftest {
        let report = selftest::run();
        print!("{report}");
        return if report.passed() { Ok(None) } else { Err(CliError::Runtime("selftest failed".into())) };
    }
    cfg.validate()?;
    let artifacts = match command {
        Command::Simulate => commands::simulate(cfg)?,
        Command::Extract => commands::extract(cfg)?,
        Command::Benchmark => commands::benchmark(cfg)?,
        Command::Sweep => commands::sweep(cfg)?,
        Command::Speech { synthetic } => commands::speech(cfg, synthetic)?,
        Command::Selftest => unreachable!(),
    };
    let root = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("output"));
    let mut out = OutputDir::create(&root, &cfg.hash())?;
    for a in &artifacts {
        out.write(a)?;
    }
    out.write_config(cfg)?;
    out.finish(command.name())?;
    Ok(Some(root))
}
