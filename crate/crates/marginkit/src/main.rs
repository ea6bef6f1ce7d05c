use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use marginkit::{execute, Command, Format, Overrides};

/// Intrinsic valuation, margin of safety and Kelly allocation.
#[derive(Debug, Parser)]
#[command(name = "marginkit", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, default_value = "marginkit.json")]
    config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulated intrinsic value per asset.
    Value,
    /// Margins of safety and GB-ratio per asset.
    Safety,
    /// Kelly wagers, capped allocation, correlations and wager curves.
    Allocate,
    /// Assets ranked by GB-ratio above `min_gb`.
    Screen,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Value => Command::Value,
        Cmd::Safety => Command::Safety,
        Cmd::Allocate => Command::Allocate,
        Cmd::Screen => Command::Screen,
    };
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
    };
    match execute(&cli.config, command, &overrides) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
