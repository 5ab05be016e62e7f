//! `dqpt-lab`: quench dynamics of the alternating-field XY chain with DM
//! interaction, from the command line.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{RawConfig, Settings};
use crate::output::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<dqpt_core::Error> for CliError {
    fn from(e: dqpt_core::Error) -> Self {
        use dqpt_core::Error::*;
        match e {
            InvalidParameter { .. } | InadmissibleInitialState { .. } | SizeLimit { .. } | WindowTooShort { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Phase label of every point of a parameter plane.
    PhaseDiagram,
    /// F(t) on a uniform time grid.
    RateFunction,
    /// Critical times t* and momenta φ* of the quench.
    CriticalTimes,
    /// DQPT flag for quenches from the initial point to every point of a plane.
    DqptScan,
    /// Pair log-negativities and effective GGM along the quench.
    EntanglementDynamics,
    /// Time-averaged GGM fluctuation over a plane.
    GgmScan,
    /// Cross-engine consistency suite against exact diagonalisation.
    OracleCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PhaseDiagram => "phase-diagram",
            Command::RateFunction => "rate-function",
            Command::CriticalTimes => "critical-times",
            Command::DqptScan => "dqpt-scan",
            Command::EntanglementDynamics => "entanglement-dynamics",
            Command::GgmScan => "ggm-scan",
            Command::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dqpt-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; the payload goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads (0 = all cores). Falls back to DQPT_LAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    n_modes: Option<usize>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    eps_crit: Option<f64>,
    /// Ring length for the real-space and exact engines.
    #[arg(long, global = true)]
    size: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        raw.merge_text(&text)?;
    }
    if let Ok(v) = std::env::var("DQPT_LAB_THREADS") {
        raw.set("threads", v.trim())
            .map_err(|_| CliError::Validation("DQPT_LAB_THREADS: invalid".into()))?;
    }
    let overrides = [
        ("threads", cli.threads.map(|v| v.to_string())),
        ("t_max", cli.t_max.map(|v| v.to_string())),
        ("n_modes", cli.n_modes.map(|v| v.to_string())),
        ("tau", cli.tau.map(|v| v.to_string())),
        ("eps_crit", cli.eps_crit.map(|v| v.to_string())),
        ("size", cli.size.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            raw.set(key, &v)?;
        }
    }
    Ok(raw)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let raw = load_config(cli)?;
    let settings = Settings::from_raw(&raw)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let result = pool.install(|| commands::execute(cli.command, &settings))?;
    let wall = start.elapsed().as_secs_f64();
    let payload = match cli.format {
        Format::Csv => output::to_csv(&result.table),
        Format::Json => output::to_json(&result.table),
    };
    let meta = json!({
        "tool": "dqpt-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config": config::echo(&raw),
        "wall_time_s": wall,
        "threads": pool.current_num_threads(),
        "rows": result.table.rows.len(),
        "notes": result.notes,
    });
    let meta = serde_json::to_string_pretty(&meta).expect("serialisable") + "\n";
    match &cli.out {
        Some(path) => {
            write_file(path, &payload)?;
            write_file(&meta_path(path), &meta)?;
        }
        None => {
            print!("{payload}");
            eprint!("{meta}");
        }
    }
    result.status
}

/// A command's table, free-form notes for the metadata, and its verdict.
pub struct Outcome {
    pub table: Table,
    pub notes: Vec<String>,
    /// An error to report after the output has been written.
    pub status: Result<(), CliError>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
