//! Command-line flags and the flat config-file format.
//!
//! A config file holds one `flag-name = value` pair per line (`#` starts a
//! comment). Its entries are spliced in front of the command-line flags, and
//! since later occurrences of a flag override earlier ones, flags on the
//! command line win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("PERMQKD_GIT_DESCRIBE"),
    ")"
);

#[derive(Debug, Parser)]
#[command(name = "permqkd", version = VERSION, about = "Permutation-based MDI-QKD simulator")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol once and write its transcripts and check report.
    Run(RunArgs),
    /// Pass probability of a cheating Charlie against the number of lies.
    AttackSweep(SweepArgs),
    /// Timing side channel with and without Bob's delay bank.
    TimingDemo(TimingDemoArgs),
    /// Counting bound on discriminating Bob's permutations.
    Feasibility(FeasibilityArgs),
    /// Check slot duration against fibre rate.
    ValidateTiming(ValidateTimingArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Run(_) => "run",
            Self::AttackSweep(_) => "attack-sweep",
            Self::TimingDemo(_) => "timing-demo",
            Self::Feasibility(_) => "feasibility",
            Self::ValidateTiming(_) => "validate-timing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    #[value(name = "jsonl", alias = "json-lines")]
    Jsonl,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Experiment seed (mandatory when the CI environment variable is set).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for summary.json and data files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Data format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Flat key = value file mirroring the flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Honest,
    Flip,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    /// Rounds.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Registers per round (even).
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = permqkd::protocol::DEFAULT_CHECK_FRACTION)]
    pub check_fraction: f64,
    /// Per-cell significance of the wrong-basis uniformity test.
    #[arg(long, default_value_t = permqkd::protocol::DEFAULT_UNIFORMITY_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum, default_value = "honest")]
    pub strategy: StrategyArg,
    /// Registers Charlie lies about.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Eve measures every register between Alice and Bob.
    #[arg(long)]
    pub intercept_resend: bool,
    /// Exit non-zero if the security check aborts.
    #[arg(long)]
    pub expect_accept: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum, action = ArgAction::Set, value_delimiter = ',', default_value = "flip,random")]
    pub strategy: Vec<StrategyArg>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0,4,8,16,32")]
    pub k_values: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TimingDemoArgs {
    /// Ports.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Number of delays; defaults to m + 1.
    #[arg(long)]
    pub bank_size: Option<usize>,
    /// min_gap / ((m-1)·stagger) values to sweep.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
    pub gap_ratios: Vec<f64>,
    /// Attacker stagger between consecutive ports, seconds.
    #[arg(long, default_value_t = 1e-9)]
    pub stagger: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeasibilityArgs {
    #[arg(long, default_value_t = 12)]
    pub m_max: usize,
    /// Also dump the orbit Gram matrix of a random probe with this many
    /// registers (at most 4) as dense text.
    #[arg(long)]
    pub dump_gram: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateTimingArgs {
    /// Slot duration, seconds.
    #[arg(long)]
    pub tau: f64,
    /// Fibre rate, bits per second.
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long)]
    pub multiplexed: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    args.iter().enumerate().find_map(|(i, a)| {
        if let Some(p) = a.strip_prefix("--config=") {
            Some(PathBuf::from(p))
        } else if a == "--config" {
            args.get(i + 1).map(PathBuf::from)
        } else {
            None
        }
    })
}

/// Turn a config file into flag tokens.
pub fn config_tokens(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
        path: path.to_owned(),
        source,
    })?;
    let mut tokens = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        match value.trim() {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            v => {
                tokens.push(format!("--{key}"));
                tokens.push(v.to_owned());
            }
        }
    }
    Ok(tokens)
}

/// Splice config-file flags in right after the subcommand name.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')) else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut out = args[..at].to_vec();
    out.extend(config_tokens(&path)?);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
