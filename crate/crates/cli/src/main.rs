use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

/// Bilevel equilibrium solver toolkit.
#[derive(Parser)]
#[command(name = "bep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the discrete forward-backward-forward iteration.
    Solve {
        #[arg(long)]
        config: std::path::PathBuf,
        /// Output directory for trace CSV and summary JSON.
        #[arg(long, default_value = ".")]
        out: std::path::PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        format: String,
    },
    /// Integrate the continuous-time dynamical system.
    Dynamics {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long, default_value = ".")]
        out: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        format: String,
    },
    /// Report which convergence-theorem hypotheses a schedule satisfies.
    Check {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long, default_value = ".")]
        out: std::path::PathBuf,
    },
    /// Solve the configured problem by brute-force grid search.
    Oracle {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long, default_value = ".")]
        out: std::path::PathBuf,
    },
    /// Run the sampled invariant suites and report worst witnesses.
    Properties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value = ".")]
        out: std::path::PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve {
            config,
            out,
            seed,
            format,
        } => commands::cmd_solve(&config, &out, seed, &format),
        Command::Dynamics {
            config,
            out,
            seed,
            format,
        } => commands::cmd_dynamics(&config, &out, seed, &format),
        Command::Check { config, out } => commands::cmd_check(&config, &out),
        Command::Oracle { config, out } => commands::cmd_oracle(&config, &out),
        Command::Properties { seed, samples, out } => commands::cmd_properties(seed, samples, &out),
    };
    ExitCode::from(code)
}
