//! `rank-lab <pretrain|train|compare|variance> --config <path> [--out <dir>] [--seed <int>]`
//!
//! Each command reads one TOML config (see [`config`]) and writes its
//! artifacts under `<out>/<run-name>/`. The output root is `--out`, else
//! `$RANK_LAB_OUT`, else `out`.

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::dataio::DataError;
use crate::experiment::ExperimentError;
use crate::pgvar::PgVarError;
use crate::policy::PolicyError;
use crate::scorers::ScorerError;
use crate::trainers::TrainError;

pub use commands::{read_results_csv, ResultRow};

pub const OUT_ENV: &str = "RANK_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Pretrain a softmax generator by maximum likelihood.
    Pretrain,
    /// Train one regime, evaluating after every epoch.
    Train,
    /// Train several regimes under a matched budget over several seeds.
    Compare,
    /// Gradient-variance study of the constant-baseline bound.
    Variance,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "rank-lab", version, about = "Adversarial and contrastive learning-to-rank lab")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Output root [default: $RANK_LAB_OUT or `out`].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 1 config (including an unreadable config file), 2 data (input and
    /// output files), 3 NaN.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

fn classify_scorer(e: ScorerError) -> CliError {
    match e {
        ScorerError::NonFinite(_) => CliError::Numeric(e.to_string()),
        ScorerError::Incompatible(_) | ScorerError::Representation { .. } | ScorerError::Checkpoint(_) => {
            CliError::Data(e.to_string())
        }
        _ => CliError::Config(e.to_string()),
    }
}

fn classify_policy(e: PolicyError) -> CliError {
    match e {
        PolicyError::Scorer(s) => classify_scorer(s),
        PolicyError::Weights(_) => CliError::Numeric(e.to_string()),
        e => CliError::Config(e.to_string()),
    }
}

fn classify_train(e: TrainError) -> CliError {
    match e {
        TrainError::NonFinite(_) => CliError::Numeric(e.to_string()),
        TrainError::Scorer(s) => classify_scorer(s),
        TrainError::Policy(p) => classify_policy(p),
        TrainError::Csv(_) => CliError::Data(e.to_string()),
        e => CliError::Config(e.to_string()),
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Spec(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Data(d) => d.into(),
            ExperimentError::Train(t) => classify_train(t),
            ExperimentError::Scorer(s) => classify_scorer(s),
            ExperimentError::Policy(p) => classify_policy(p),
        }
    }
}

impl From<PgVarError> for CliError {
    fn from(e: PgVarError) -> Self {
        match e {
            PgVarError::Data(d) => d.into(),
            PgVarError::Train(t) => classify_train(t),
            PgVarError::Scorer(s) => classify_scorer(s),
            PgVarError::Policy(p) => classify_policy(p),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        classify_train(e)
    }
}

impl From<ScorerError> for CliError {
    fn from(e: ScorerError) -> Self {
        classify_scorer(e)
    }
}

/// Output root: `--out`, else `$RANK_LAB_OUT`, else `out`.
pub fn output_root(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Run one command; returns the run directory.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let raw = std::fs::read(&cli.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", cli.config.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", cli.config.display())))?;
    let base = cli.config.parent().unwrap_or(std::path::Path::new("."));
    let mut cfg = config::RunConfig::parse(&text, base).map_err(CliError::Config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let name = match &cfg.name {
        Some(n) if !n.is_empty() && !n.contains(['/', '\\']) && n != ".." => n.clone(),
        Some(n) => return Err(CliError::Config(format!("`name`: bad run name `{n}`"))),
        None => cli
            .config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into()),
    };
    let dir = output_root(cli.out.clone()).join(name);
    let ctx = commands::RunDir::new(dir, raw);
    match cli.command {
        Command::Pretrain => commands::pretrain(&cfg, &ctx)?,
        Command::Train => commands::train(&cfg, &ctx)?,
        Command::Compare => commands::compare(&cfg, &ctx)?,
        Command::Variance => commands::variance(&cfg, &ctx)?,
    }
    Ok(ctx.path().to_path_buf())
}
