//! Command-line front end.
//!
//! `qctl <command> --config <path> [--out <path>] [--format csv|json] [--seed N]`
//!
//! The config file is a JSON object. Besides the command keys (see
//! [`commands`]) it may carry `format`, `out` and `seed`; flags win over config.
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

pub mod commands;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::{Error, Result};
pub use report::{Cell, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "qctl", version, about = "Fidelity model and specification derivation for spin-qubit control electronics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config file; omitted means all defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Seed for Monte-Carlo runs.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Single-qubit gate and idle infidelity breakdown.
    SingleGate(Common),
    /// Intrinsic filter functions versus offset frequency.
    Filters(Common),
    /// Full-Hamiltonian versus rotating-wave fidelity.
    RwaSweep(Common),
    /// Crosstalk on an unaddressed qubit.
    Fdma(Common),
    /// Two-qubit operating point, eigenenergies, gate and idle errors.
    TwoQubit(Common),
    /// Charge transfer, detection SNR and read-out fidelity.
    Readout(Common),
    /// Specification tables from an infidelity budget.
    Derive(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SingleGate(_) => "single-gate",
            Command::Filters(_) => "filters",
            Command::RwaSweep(_) => "rwa-sweep",
            Command::Fdma(_) => "fdma",
            Command::TwoQubit(_) => "two-qubit",
            Command::Readout(_) => "readout",
            Command::Derive(_) => "derive",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::SingleGate(c)
            | Command::Filters(c)
            | Command::RwaSweep(c)
            | Command::Fdma(c)
            | Command::TwoQubit(c)
            | Command::Readout(c)
            | Command::Derive(c) => c,
        }
    }
}

pub const COMMANDS: [&str; 7] = ["single-gate", "filters", "rwa-sweep", "fdma", "two-qubit", "readout", "derive"];

/// Runs one command on a parsed config object (without the `format`, `out`
/// and `seed` keys).
pub fn run_command(name: &str, config: &Value, seed: Option<u64>) -> Result<Report> {
    let f = match name {
        "single-gate" => commands::single_gate,
        "filters" => commands::filters,
        "rwa-sweep" => commands::rwa_sweep,
        "fdma" => commands::fdma,
        "two-qubit" => commands::two_qubit,
        "readout" => commands::readout_cmd,
        "derive" => commands::derive,
        _ => return Err(Error::Validation(format!("unknown command '{name}'"))),
    };
    f(config, seed)
}

pub struct Settings {
    pub config: Value,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Reads the config and resolves flag versus config precedence.
pub fn settings(common: &Common) -> Result<Settings> {
    let mut config = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Validation(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| Error::Validation(format!("config {}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut config else {
        return Err(Error::Validation("config must be a JSON object".into()));
    };
    let format = match map.remove("format") {
        None => None,
        Some(Value::String(s)) if s == "csv" => Some(Format::Csv),
        Some(Value::String(s)) if s == "json" => Some(Format::Json),
        Some(v) => return Err(Error::Validation(format!("format: expected \"csv\" or \"json\", got {v}"))),
    };
    let out = match map.remove("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => return Err(Error::Validation(format!("out: expected a path string, got {v}"))),
    };
    let seed = match map.remove("seed") {
        None => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| Error::Validation(format!("seed: expected a non-negative integer, got {v}")))?),
    };
    Ok(Settings {
        config,
        format: common.format.or(format).unwrap_or(Format::Csv),
        out: common.out.clone().or(out),
        seed: common.seed.or(seed),
    })
}

/// Renders the report text for a command.
pub fn render(cmd: &Command) -> Result<(String, Settings, Report)> {
    let s = settings(cmd.common())?;
    let report = run_command(cmd.name(), &s.config, s.seed)?;
    let text = match s.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(&s.config, s.seed),
    };
    Ok((text, s, report))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) => 2,
        Error::Numerical(_) => 3,
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let run = || -> Result<()> {
        let (text, s, report) = render(&cli.command)?;
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        match &s.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::Validation(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    };
    match run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
