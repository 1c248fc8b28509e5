//! Command-line front end for the `msqaoa` simulator: config parsing,
//! dataset ingestion and the subcommand runners behind the `msqaoa` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::{Context, Manifest, Output};
pub use config::{Format, RunConfig};
pub use dataset::{ExperimentDataset, Table};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "msqaoa", version, about = "Trapped-ion Mølmer-Sørensen and analog QAOA simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML, or a manifest.json from an earlier run).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sampled outputs; overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Table format for the main output [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Populations versus time for an MS sequence.
    SimulateMs,
    /// Approximation-ratio heatmap over (gamma, beta).
    QaoaHeatmap,
    /// Compare a simulation output with an experimental dataset.
    Compare {
        /// Simulation output (CSV or JSON table).
        #[arg(long)]
        sim: PathBuf,
        /// Experimental dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Pixel to report r* at, as GAMMA,BETA. Defaults to the simulated
        /// optimum.
        #[arg(long, value_parser = parse_pixel)]
        pixel: Option<(f64, f64)>,
    },
    /// Fit an independent bit-flip model to a SPAM matrix.
    FitSpam {
        /// SPAM matrix CSV.
        input: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        resolution: f64,
    },
    /// Calibrate the max-power Rabi rate.
    Calibrate,
    #[command(hide = true)]
    Verify,
}

fn parse_pixel(s: &str) -> Result<(f64, f64), String> {
    let (g, b) = s.split_once(',').ok_or("expected GAMMA,BETA")?;
    let g = g.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((g, b))
}

fn required_config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required for this command"))?;
    config::load(path)
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let ctx = Context {
        out: cli.out.clone(),
        format: cli.format,
        seed: cli.seed,
    };
    let work = || match &cli.command {
        Command::SimulateMs => commands::simulate_ms(&required_config(cli)?, &ctx),
        Command::QaoaHeatmap => commands::qaoa_heatmap(&required_config(cli)?, &ctx),
        Command::Calibrate => commands::calibrate(&required_config(cli)?, &ctx),
        Command::Compare { sim, data, pixel } => {
            let cfg = cli.config.as_ref().map(|p| config::load(p)).transpose()?;
            commands::compare(sim, data, cfg.as_ref(), *pixel, &ctx)
        }
        Command::FitSpam { input, resolution } => commands::fit_spam(input, *resolution, &ctx),
        Command::Verify => commands::verify(),
    };
    match cli.threads {
        Some(0) => Err(CliError::config("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::config(format!("--threads: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
