//! `lmdp-lab`: command-line harness over the LMDP laboratory.
//!
//! Subcommands: `gen-hard`, `oracle`, `plan`, `simulate`, `learn`,
//! `check-separation`, `divergence`, `experiment`. Outputs are JSON and CSV
//! files under `--out`; errors print machine-readable JSON on stderr with
//! distinct exit codes (2 usage, 3 schema, 4 budget, 5 numerical).

mod commands;
mod experiment;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmdp_lab::Error;

#[derive(Parser)]
#[command(name = "lmdp-lab", version, about = "Latent MDP laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a hard instance and write its model document.
    GenHard(commands::GenHardArgs),
    /// Exact optimal value (and optionally policy) by brute force.
    Oracle(commands::OracleArgs),
    /// Short-memory planning with context inference.
    Plan(commands::PlanArgs),
    /// Roll out seeded episodes.
    Simulate(commands::SimulateArgs),
    /// Optimistic maximum-likelihood estimation on a finite model class.
    Learn(commands::LearnArgs),
    /// Separation diagnostics: strong separation, decodability, ϖ-profile.
    CheckSeparation(commands::CheckSeparationArgs),
    /// Divergences between two finite distributions.
    Divergence(commands::DivergenceArgs),
    /// Run a sweep described by a config file and persist a run record.
    Experiment(experiment::ExperimentArgs),
}

/// Exit codes: 2 usage, 3 schema, 4 budget, 5 numerical.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Precondition(_) | Error::UnsupportedPolicy(_) => 2,
        Error::InvalidModel(_) | Error::InvalidDist(_) | Error::DimensionMismatch(_) => 3,
        Error::BudgetExceeded { .. } => 4,
        Error::Numerical(_) | Error::UnreachablePrefix | Error::Infeasible { .. } => 5,
    }
}

fn kind_name(e: &Error) -> &'static str {
    match e {
        Error::Precondition(_) | Error::UnsupportedPolicy(_) => "usage",
        Error::InvalidModel(_) | Error::InvalidDist(_) | Error::DimensionMismatch(_) => "schema",
        Error::BudgetExceeded { .. } => "budget",
        Error::Numerical(_) | Error::UnreachablePrefix | Error::Infeasible { .. } => "numerical",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits with code 2 on usage errors
    let result = match cli.command {
        Command::GenHard(args) => commands::gen_hard(args),
        Command::Oracle(args) => commands::oracle(args),
        Command::Plan(args) => commands::plan(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Learn(args) => commands::learn(args),
        Command::CheckSeparation(args) => commands::check_separation(args),
        Command::Divergence(args) => commands::divergence(args),
        Command::Experiment(args) => experiment::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": {
                        "kind": kind_name(&e),
                        "message": e.to_string(),
                        "exit_code": code,
                    }
                })
            );
            ExitCode::from(code)
        }
    }
}
