use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ultracontract::cli::{execute, ExitStatus, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Spectrum,
    Heat,
    Bound,
    Verify,
    Example,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Spectrum => Subcommand::Spectrum,
            Command::Heat => Subcommand::Heat,
            Command::Bound => Subcommand::Bound,
            Command::Verify => Subcommand::Verify,
            Command::Example => Subcommand::Example,
        }
    }
}

/// Radial spectral, heat-kernel and functional-inequality checks on model
/// manifolds.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    command: Command,
    /// Run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test-family seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the report on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitStatus::Usage.code() as u8) } else { ExitCode::SUCCESS };
        }
    };
    let code = execute(args.command.into(), &args.config, args.out.as_deref(), args.seed, args.quiet);
    ExitCode::from(code as u8)
}
