//! bosechain: engineered-chain transfer experiments from JSON configs.
//!
//! Exit codes: 0 on success, 1 for configuration or IO problems, 2 when the
//! computation finished but a physics assertion failed. Data files are
//! deterministic for a given config; the stdout summary carries the only
//! timestamp.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

mod config;
mod output;
mod runner;

use output::Format;

#[derive(Debug)]
pub enum CliError {
    /// Bad config or a request the library rejects; exit 1.
    Config(String),
    /// Filesystem trouble reading the config or writing results; exit 1.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser)]
#[command(name = "bosechain", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a JSON config.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Directory for the data file (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the output format: json or csv.
        #[arg(long)]
        format: Option<String>,
        /// Worker threads (overrides BOSECHAIN_THREADS; default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate {
        /// Path to the experiment config.
        config: PathBuf,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            format,
            threads,
        } => run(&config, out.as_deref(), format.as_deref(), threads),
        Command::Validate { config } => validate(&config),
        Command::Version => {
            println!("bosechain {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_config(path: &Path) -> Result<config::ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    config::parse_config(&text)
}

fn validate(path: &Path) -> Result<ExitCode, CliError> {
    let cfg = read_config(path)?;
    println!(
        "{}",
        json!({
            "config": path.display().to_string(),
            "experiment": cfg.experiment.name(),
            "valid": true,
        })
    );
    Ok(ExitCode::SUCCESS)
}

/// Thread count resolution: flag, then BOSECHAIN_THREADS, then rayon default.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = || match std::env::var("BOSECHAIN_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Config(format!(
                "BOSECHAIN_THREADS must be a positive integer, got '{s}'"
            ))),
        },
        Err(_) => Ok(None),
    };
    let threads = match flag {
        Some(0) => {
            return Err(CliError::Config(
                "--threads must be a positive integer".into(),
            ))
        }
        Some(k) => Some(k),
        None => from_env()?,
    };
    if let Some(k) = threads {
        // a second build_global in the same process is harmless: keep the pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

fn run(
    config_path: &Path,
    out_dir: Option<&Path>,
    format_flag: Option<&str>,
    threads: Option<usize>,
) -> Result<ExitCode, CliError> {
    configure_threads(threads)?;
    let cfg = read_config(config_path)?;

    let format = match format_flag {
        Some(name) => Format::parse(name)?,
        None => match cfg.output.as_ref().and_then(|o| o.format.as_deref()) {
            Some(name) => Format::parse(name)?,
            None => Format::Json,
        },
    };

    let started = Instant::now();
    let outcome = runner::execute(&cfg)?;
    let wall = started.elapsed().as_secs_f64();

    let table = output::emit_table(&outcome.reports, format)?;
    let dir = out_dir.unwrap_or(Path::new("."));
    let file_name = match cfg.output.as_ref().and_then(|o| o.path.clone()) {
        Some(p) => p,
        None => format!("{}.{}", cfg.experiment.name(), format.extension()),
    };
    let data_path = dir.join(&file_name);
    if let Some(parent) = data_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Io(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    fs::write(&data_path, &table)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", data_path.display())))?;

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let status = if outcome.violation.is_some() {
        "violated"
    } else {
        "ok"
    };
    let mut summary = serde_json::Map::new();
    summary.insert("experiment".into(), json!(cfg.experiment.name()));
    summary.insert("status".into(), json!(status));
    summary.insert("rows".into(), json!(outcome.reports.len()));
    summary.insert("results".into(), outcome.key_numbers.into());
    if let Some(msg) = &outcome.violation {
        summary.insert("violation".into(), json!(msg));
    }
    summary.insert("output".into(), json!(data_path.display().to_string()));
    summary.insert("wall_time_seconds".into(), json!(wall));
    summary.insert("timestamp_unix".into(), json!(timestamp));
    println!("{}", serde_json::Value::Object(summary));

    Ok(if outcome.violation.is_some() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
