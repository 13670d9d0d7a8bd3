use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gamehomog_lab::{run, Command, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(
    name = "gamehomog",
    version,
    about = "Stochastic homogenization experiments for differential-game Hamilton-Jacobi equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set campaign.samples=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, env = "GAMEHOMOG_WORKERS")]
    workers: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one environment and dump it on the solver grid.
    SampleEnv(Common),
    /// Solve the configured initial-value problem once.
    Solve(Common),
    /// Monte-Carlo table of U(theta, t) for the campaign momenta.
    Estimate(Common),
    /// Extract the effective Hamiltonian with error bars and diagnostics.
    Effective(Common),
    /// Homogenization rate over the campaign scales.
    Rate(Common),
    /// Structural checks of the configured game.
    Verify(Common),
}

fn split_override(s: &str) -> Result<(String, String), LabError> {
    match s.split_once('=') {
        Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
        None => Err(LabError::Config {
            path: s.into(),
            reason: "expected KEY=VALUE".into(),
        }),
    }
}

fn execute(cmd: Command, c: Common) -> Result<i32, LabError> {
    let overrides = c.set.iter().map(|s| split_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut cfg = ExperimentConfig::load(&c.config, &overrides)?;
    if let Some(out) = c.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if c.workers == Some(0) {
        return Err(LabError::Config {
            path: "--workers".into(),
            reason: "must be at least 1".into(),
        });
    }
    let outcome = run(cmd, &cfg, c.workers)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (cmd, common) = match cli.command {
        Cmd::SampleEnv(c) => (Command::SampleEnv, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::Effective(c) => (Command::Effective, c),
        Cmd::Rate(c) => (Command::Rate, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    match execute(cmd, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
