use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use helix_kmd::harness::{self, RunOptions, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    SimulateKmd,
    BuildStream,
    ResidualScan,
    AlphaSolve,
    #[value(name = "lift-3d")]
    Lift3d,
    Verify,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::SimulateKmd => Subcommand::SimulateKmd,
            Command::BuildStream => Subcommand::BuildStream,
            Command::ResidualScan => Subcommand::ResidualScan,
            Command::AlphaSolve => Subcommand::AlphaSolve,
            Command::Lift3d => Subcommand::Lift3d,
            Command::Verify => Subcommand::Verify,
        }
    }
}

/// Nearly parallel helical vortex filaments and concentrated helical stream functions.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to HELIX_KMD_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated epsilon values, e.g. "e^-10,e^-20,1e-9".
    #[arg(long, allow_hyphen_values = true)]
    epsilon_override: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { harness::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let env = std::env::var(harness::THREADS_ENV).ok();
    match harness::resolve_threads(cli.threads, env.as_deref()) {
        Ok(n) => harness::init_threads(n),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(harness::exit_code(&e) as u8);
        }
    }
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        epsilon_override: cli.epsilon_override,
    };
    match harness::run(cli.command.into(), &opts) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            ExitCode::from(summary.manifest.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
