//! Command line driver for freshness-optimal scheduling experiments:
//! solve, evaluate, simulate, sweep, and verify over one TOML-configured
//! model instance.

mod artifacts;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aoinf", version, about = "Age-of-inference scheduling experiments")]
struct Cli {
    /// Configuration file (TOML). Built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. --set model.p_tx=0.4.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Run with a single seed (overrides simulation.seeds).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Act with a policy table written by `solve` instead of a named rule.
    #[arg(long, global = true, value_name = "FILE")]
    policy: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal policy; write policy, value, and report files.
    Solve,
    /// Exactly evaluate a decision rule's long-run average.
    Evaluate {
        /// Rule to evaluate (defaults to a fresh optimal solve).
        #[arg(long, value_enum)]
        rule: Option<RuleKind>,
    },
    /// Roll out seeded trajectories; write traces, events, and a summary.
    Simulate {
        /// Rule to follow (defaults to a fresh optimal solve).
        #[arg(long, value_enum)]
        rule: Option<RuleKind>,
    },
    /// Solve and exactly evaluate all policies across the probability grid.
    Sweep,
    /// Run the self-verification suite on the configured model.
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleKind {
    Optimal,
    Random,
    Onboard,
    Offload,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = config::load(
        cli.config.as_deref(),
        &cli.sets,
        cli.out.as_deref(),
        cli.seed,
    )
    .and_then(|cfg| {
        let policy = cli.policy.as_deref();
        match cli.command {
            Command::Solve => {
                reject_policy_flag(policy, "solve")?;
                run::cmd_solve(&cfg)
            }
            Command::Evaluate { rule } => run::cmd_evaluate(&cfg, rule, policy),
            Command::Simulate { rule } => run::cmd_simulate(&cfg, rule, policy),
            Command::Sweep => {
                reject_policy_flag(policy, "sweep")?;
                run::cmd_sweep(&cfg)
            }
            Command::Verify => {
                reject_policy_flag(policy, "verify")?;
                run::cmd_verify(&cfg)
            }
        }
    });

    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn reject_policy_flag(policy: Option<&std::path::Path>, command: &str) -> anyhow::Result<()> {
    if policy.is_some() {
        anyhow::bail!("--policy is not used by `{command}`");
    }
    Ok(())
}
