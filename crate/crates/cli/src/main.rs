//! `tcnoma` — command-line front end for the trellis-coded NOMA simulator.
//!
//! Subcommands map onto the library: `simulate` (BER vs SNR), `power-sweep`
//! (BER vs power split), `freedist` (distance table) and `optimize`
//! (power-split optimizer). Experiments are configured by flags, an
//! optional key=value config file and optional presets, merged as
//! `defaults < preset < config file < flags`.

mod commands;
mod config;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, ExperimentKind, PartialConfig};

/// Command failures split by exit code: usage errors (bad flags, bad config
/// values, invalid combinations) exit 2, runtime errors (I/O, simulation)
/// exit 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: String) -> Self {
        CliError::Usage(msg)
    }

    pub fn runtime(msg: String) -> Self {
        CliError::Runtime(msg)
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }

    /// Prepends context (e.g. a file path) to the message.
    pub fn with_context(self, context: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{context}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser)]
#[command(
    name = "tcnoma",
    version,
    about = "Trellis-coded power-domain NOMA: link simulation, free-distance analysis \
             and power allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER vs SNR for one or more schemes at a fixed power pair
    Simulate(ExperimentArgs),
    /// Monte-Carlo BER vs power split p1/p2 under a unit sum budget
    #[command(name = "power-sweep")]
    PowerSweep(ExperimentArgs),
    /// Free-distance table over a ratio grid: closed forms next to the
    /// trellis search
    Freedist(FreedistArgs),
    /// Optimal power split maximizing free distance under a sum budget
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Schemes, comma-separated: tc-noma-joint, tc-noma-separate,
    /// tc-noma-joint-rotate, tcma, uc-noma
    #[arg(long, value_name = "LIST")]
    scheme: Option<String>,

    /// Weak user's transmit power (simulate only)
    #[arg(long, value_name = "P")]
    p1: Option<f64>,

    /// Strong user's transmit power (simulate only)
    #[arg(long, value_name = "P")]
    p2: Option<f64>,

    /// SNR points in dB: comma list (12,16) or inclusive range 6:18:2
    #[arg(long = "snr-db", value_name = "LIST")]
    snr_db: Option<String>,

    /// Power splits p1/p2 for power-sweep: comma list or range 0.05:0.95:0.05
    #[arg(long, value_name = "LIST")]
    ratio: Option<String>,

    /// Frames per (scheme, SNR, split) point
    #[arg(long, value_name = "N")]
    frames: Option<usize>,

    /// Information steps per frame
    #[arg(long = "frame-len", value_name = "N")]
    frame_len: Option<usize>,

    /// Master seed; every (SNR, frame) pair derives its own stream
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// CSV output path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Canned experiment: fig7 or fig8 (simulate), fig9 (power-sweep)
    #[arg(long, value_name = "ID")]
    preset: Option<String>,

    /// key=value config file; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Component-code description applied to both streams (defaults to the
    /// built-in 4-state code; see README for the format)
    #[arg(long = "trellis-file", value_name = "PATH")]
    trellis_file: Option<PathBuf>,
}

#[derive(Args)]
struct FreedistArgs {
    /// Sum power budget p1 + p2
    #[arg(long, value_name = "P", default_value_t = 1.0)]
    budget: f64,

    /// Ratio grid step; rows at step, 2*step, ... below 1
    #[arg(long = "ratio-step", value_name = "STEP", default_value_t = 0.02)]
    ratio_step: f64,

    /// Longest diverge-merge event length searched
    #[arg(long = "max-len", value_name = "N", default_value_t = 12)]
    max_len: usize,

    /// CSV output path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Sum power budget to split
    #[arg(value_name = "BUDGET", default_value_t = 1.0)]
    budget: f64,

    /// Ratio grid step for the numerical comparison
    #[arg(long, value_name = "STEP", default_value_t = 0.01)]
    step: f64,

    /// Longest diverge-merge event length searched
    #[arg(long = "max-len", value_name = "N", default_value_t = 12)]
    max_len: usize,
}

impl ExperimentArgs {
    /// Lifts the flag values into the config merge layer, parsing list
    /// syntaxes and names.
    fn to_partial(&self) -> Result<PartialConfig, CliError> {
        Ok(PartialConfig {
            schemes: self
                .scheme
                .as_deref()
                .map(config::parse_schemes)
                .transpose()
                .map_err(|e| CliError::usage(format!("--scheme: {e}")))?,
            p1: self.p1,
            p2: self.p2,
            snrs_db: self
                .snr_db
                .as_deref()
                .map(config::parse_f64_list)
                .transpose()
                .map_err(|e| CliError::usage(format!("--snr-db: {e}")))?,
            ratios: self
                .ratio
                .as_deref()
                .map(config::parse_f64_list)
                .transpose()
                .map_err(|e| CliError::usage(format!("--ratio: {e}")))?,
            frames: self.frames,
            frame_len: self.frame_len,
            seed: self.seed,
            out: self.out.clone(),
            trellis_file: self.trellis_file.clone(),
            preset: self
                .preset
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(|e: String| CliError::usage(format!("--preset: {e}")))?,
        })
    }

    fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            None => PartialConfig::default(),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::runtime(format!("cannot read config {}: {e}", path.display()))
                })?;
                PartialConfig::parse_key_values(&text)
                    .map_err(|e| e.with_context(&path.display().to_string()))?
            }
        };
        config::resolve(kind, file, self.to_partial()?)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            commands::simulate(&args.resolve(ExperimentKind::Simulate)?)
        }
        Command::PowerSweep(args) => {
            commands::power_sweep(&args.resolve(ExperimentKind::PowerSweep)?)
        }
        Command::Freedist(args) => commands::freedist(&args),
        Command::Optimize(args) => commands::optimize(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
