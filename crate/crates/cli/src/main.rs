//! `gfmsim` command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 when
//! the numerics fail (blow-up, no equilibrium, unsettled response).

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;

#[derive(Parser)]
#[command(name = "gfmsim", version, about = "Grid-forming inverter control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and write the trace and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for output files (default: current directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the scenario once per strategy and tabulate step metrics.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of droop,vsg,udc (default: all configured).
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
        /// Comma-separated subset of rise,settle,overshoot,rocof.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print closed-loop poles, zeros and DC gains and write a sampled
    /// frequency response.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("GFMSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("GFMSIM_THREADS must be a positive integer, got `{raw}`")))?;
    // a second initialization only happens in tests; the first one wins
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let out = |d: Option<PathBuf>| d.unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Simulate { config, out_dir } => commands::simulate(&config, &out(out_dir)),
        Command::Compare {
            config,
            strategies,
            metrics,
            out_dir,
        } => commands::compare(&config, strategies.as_deref(), metrics.as_deref(), &out(out_dir)),
        Command::Analyze { config, out_dir } => commands::analyze(&config, &out(out_dir)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
