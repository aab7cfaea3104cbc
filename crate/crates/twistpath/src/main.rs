use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twistpath::commands::{self, error_exit_code, Run, Status};
use twistpath::config::RunConfig;
use twistpath::Result;

#[derive(Parser)]
#[command(version, about = "Twisted cscK continuity paths on flat tori and CP1")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite for the configured backend.
    Verify,
    /// Solve at t = 1 and track the path to `path.t_end`.
    Path,
    /// Scan energy functionals along a path of potentials.
    Energy {
        /// JSON-lines file with one `potential` per line, as written by `path`.
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Eigenvalues of the Lichnerowicz operator.
    Spectrum {
        /// Use the t = 1 solution instead of the reference potential.
        #[arg(long)]
        anchor: bool,
    },
}

fn execute(cli: Cli) -> Result<Status> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => return Err(twistpath::CliError::Config("--config is required".into())),
    };
    let run = Run::new(config, cli.out, cli.seed)?;
    match cli.command {
        Command::Verify => {
            let (status, criteria) = commands::verify(&run)?;
            for c in &criteria {
                println!("{}", c.summary_line());
            }
            Ok(status)
        }
        Command::Path => commands::path(&run),
        Command::Energy { path } => commands::energy(&run, path.as_deref()),
        Command::Spectrum { anchor } => commands::spectrum(&run, anchor),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(status) => {
            if status == Status::Truncated {
                eprintln!("path stopped early; partial output written");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
