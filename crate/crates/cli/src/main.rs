//! `transparent`: seeds, Bäcklund steps, degree lowering and holonomy checks
//! over container files.
//!
//! Exit status is 0 when every gate passes, 2 when a gate fails (the gate and
//! its measured value are printed), and 1 on any other error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use transparent_core::Error;

mod commands;
mod config;

use commands::{BacklundArgs, GateFailure, InputArgs, LowerArgs, SeedArgs, VerifyArgs};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "transparent", version, about = "Transparent SU(2) connections on a flat torus")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a line seed and report its holomorphicity residual.
    Seed(SeedArgs),
    /// Raise the degree with a Bäcklund step.
    Backlund(BacklundArgs),
    /// Lower the degree using the top Fourier block.
    Lower(LowerArgs),
    /// Integrate parallel transport around closed geodesics.
    Verify(VerifyArgs),
    /// Print the fiber degree and parity of a container.
    Degree(InputArgs),
    /// Print the header of a container.
    Info(InputArgs),
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    cli.config.validate()?;
    let c = &cli.config;
    match &cli.command {
        Command::Seed(a) => commands::cmd_seed(c, a),
        Command::Backlund(a) => commands::cmd_backlund(c, a),
        Command::Lower(a) => commands::cmd_lower(c, a),
        Command::Verify(a) => commands::cmd_verify(c, a),
        Command::Degree(a) => commands::cmd_degree(c, a),
        Command::Info(a) => commands::cmd_info(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let gate = e.downcast_ref::<GateFailure>().is_some()
                || e.downcast_ref::<Error>().is_some_and(commands::is_gate_error);
            if gate {
                eprintln!("gate failure: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
