//! `uhisr` command-line driver.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uhisr_core::hiernet::HierError;

pub use config::RunConfig;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input data, flags or configuration (exit 2).
    Input(String),
    /// An artifact from an earlier step is absent (exit 3).
    Missing(String),
    /// `reproduce` ran but missed a threshold (exit 4).
    Acceptance(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Acceptance(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Missing(m) | CliError::Acceptance(m) => f.write_str(m),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<HierError> for CliError {
    fn from(e: HierError) -> Self {
        match e {
            HierError::MissingLatent(_) => CliError::Missing(e.to_string()),
            HierError::Plan(_)
            | HierError::MissingColumn(_)
            | HierError::UnknownLatent(_)
            | HierError::Dataset(_)
            | HierError::Shape(_) => CliError::Input(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Dataset CSV.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Run directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat key=value config file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Plan file (default: built-in three-stage plan).
    #[arg(long, global = true)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset against the TLC schema.
    Validate,
    /// Train one stage and extract its latents.
    Train {
        #[arg(long)]
        stage: usize,
    },
    /// Run symbolic regression for one level.
    Distill {
        #[arg(long)]
        level: String,
    },
    /// Train all stages, distil every level and score the equation system.
    Pipeline,
    /// Evaluate an equation system on a dataset.
    Predict {
        #[arg(long)]
        system: PathBuf,
    },
    /// Probe a trained stage's sub-models at one-hot inputs.
    Probe {
        #[arg(long)]
        stage: usize,
    },
    /// Validate, run the pipeline and predict, then check the thresholds.
    Reproduce,
    /// Write a synthetic TLC-schema dataset.
    Synth {
        /// Output CSV path.
        #[arg(long)]
        to: PathBuf,
        #[arg(long, default_value_t = 600)]
        compounds: usize,
        #[arg(long, default_value_t = 4)]
        eluents: usize,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
    },
}

/// Config file (if any) with flags applied on top.
pub fn resolve_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &common.data {
        cfg.data = Some(d.clone());
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = &common.plan {
        cfg.plan = Some(p.clone());
    }
    Ok(cfg)
}

pub fn run(command: &Command, common: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(common)?;
    match command {
        Command::Validate => commands::validate(&cfg),
        Command::Train { stage } => commands::train(&cfg, *stage),
        Command::Distill { level } => commands::distill(&cfg, level),
        Command::Pipeline => commands::pipeline(&cfg).map(|_| ()),
        Command::Predict { system } => commands::predict(&cfg, system),
        Command::Probe { stage } => commands::probe(&cfg, *stage),
        Command::Reproduce => commands::reproduce(&cfg).map(|_| ()),
        Command::Synth {
            to,
            compounds,
            eluents,
            noise,
        } => commands::synth(&cfg, to, *compounds, *eluents, *noise),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "uhisr",
    version,
    about = "Hierarchical latent extraction and symbolic regression for TLC Rf"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let top = match Cli::try_parse_from(args) {
        Ok(t) => t,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&top.command, &top.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
