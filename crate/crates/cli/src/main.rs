//! `collapse-lab`: batch front end for the collapse simulations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{OutputFormat, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "collapse-lab", version, about = "Entanglement-driven collapse simulations")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Override any config key, e.g. `--set threshold=inf`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Unitary entanglement traces, one per N.
    Trace,
    /// Energy audit at the first entangling-speed peak, over N.
    EnergySweep,
    /// Collapse trajectories with event logs, one per N.
    Trajectory,
    /// Bullet ground-state numbers.
    Bullet,
    /// Revival protocol and critical-size sweep.
    Revival,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let overrides = Overrides {
        set: cli.set.clone(),
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out.clone(),
        format: cli.format.map(|f| match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }),
    };
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if config.jobs > 0 {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build_global();
    }
    std::fs::create_dir_all(&config.out)?;
    match cli.command {
        Command::Trace => commands::trace(&config),
        Command::EnergySweep => commands::energy_sweep(&config),
        Command::Trajectory => commands::trajectory(&config),
        Command::Bullet => commands::bullet(&config),
        Command::Revival => commands::revival(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
