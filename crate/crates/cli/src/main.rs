use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use sweetspot_cli::config::ServeConfigFile;
use sweetspot_cli::{commands, http, OutputFormat};
use sweetspot_core::error::Error as CoreError;
use sweetspot_core::figures::FigureSet;
use sweetspot_core::serving::{Clock, Engine};
use sweetspot_core::Group;

/// Gradual visual-intensity experimentation toolkit.
#[derive(Parser)]
#[command(name = "sweetspot", version, about)]
struct Cli {
    /// Output file or directory (command-specific).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use a deterministic timestamp source for reproducible logs.
    #[arg(long, global = true)]
    fixed_clock: bool,
    /// Console output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute a reference fixture and compare against published values.
    Replay {
        /// Fixture path or bundled name (table1_g4, table2_g5, table3_groups).
        fixture: PathBuf,
    },
    /// Generate a synthetic event log from a simulation config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate an event log into statistics and a series analysis.
    Analyze {
        events: PathBuf,
        #[arg(long)]
        group: Group,
    },
    /// Detect the saturation level of a counts table.
    Detect {
        table: PathBuf,
        #[arg(long, default_value_t = sweetspot_core::saturation::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = sweetspot_core::saturation::DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Export per-figure `level,value` CSV files from a counts table.
    Figures {
        table: PathBuf,
        /// Chart family; inferred from the level vectors when omitted.
        #[arg(long, value_parser = parse_figure_set)]
        set: Option<FigureSet>,
    },
    /// Run the decision service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_figure_set(s: &str) -> Result<FigureSet, String> {
    match s {
        "increasing" => Ok(FigureSet::Increasing),
        "decreasing" => Ok(FigureSet::Decreasing),
        other => Err(format!(
            "unknown set {other:?}; use increasing or decreasing"
        )),
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Replay { fixture } => commands::replay(&fixture, cli.format, cli.out.as_deref()),
        Command::Simulate { config } => {
            let out = cli
                .out
                .context("simulate requires --out for the event log")?;
            commands::simulate(&config, &out, cli.seed, cli.fixed_clock)
        }
        Command::Analyze { events, group } => {
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            commands::analyze(&events, group, &out_dir, cli.format)
        }
        Command::Detect {
            table,
            window,
            epsilon,
        } => commands::detect(&table, window, epsilon),
        Command::Figures { table, set } => {
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("figures"));
            commands::figures(&table, &out_dir, set)
        }
        Command::Serve { config } => serve(&config, cli.fixed_clock),
    }
}

fn serve(config_path: &Path, fixed_clock: bool) -> Result<i32> {
    let file = ServeConfigFile::load(config_path)?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let (config, saturation) = file.resolve(base_dir)?;

    let log: Option<Box<dyn std::io::Write + Send>> = match &file.log_path {
        Some(rel) => {
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                base_dir.join(rel)
            };
            let handle = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .with_context(|| format!("opening log {}", path.display()))?;
            Some(Box::new(handle))
        }
        None => None,
    };
    let clock = if fixed_clock {
        Clock::Fixed(0)
    } else {
        Clock::System
    };
    let engine = Arc::new(Engine::new(config, log, clock)?);
    if let Some(report) = saturation {
        engine.apply_saturation(&report)?;
    }

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", file.port)).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        http::serve(engine, listener, async {
            let _ = tokio::signal::ctrl_c().await;
            eprintln!("shutting down");
        })
        .await
    })?;
    Ok(0)
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        return match core {
            CoreError::Io(_) => 3,
            _ => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 3;
    }
    // anyhow contexts wrapping I/O problems
    if err
        .chain()
        .any(|cause| cause.downcast_ref::<std::io::Error>().is_some())
    {
        return 3;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
