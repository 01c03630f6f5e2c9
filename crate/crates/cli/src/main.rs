//! Single entry point wiring profiling, routing, sweeping and explaining
//! together over JSON files. Offline (fixture-driven) operation is the
//! default posture: with fixtures and no endpoint flags, repeated runs
//! produce byte-identical artifacts.
//!
//! Exit codes: 0 success, 2 validation, 3 infeasible budget, 4 external
//! endpoint failure.

mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use skillrouter_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "skillrouter", version, about = "Skill-profile driven, cost-aware model routing with auditable traces")]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::InfeasibleBudget { .. }) => 3,
        Some(CoreError::Endpoint(_))
        | Some(CoreError::EndpointNotConfigured)
        | Some(CoreError::ProfilerParse { .. }) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
