//! Runs a subcommand through the library harness, as the binary does.
//! Usage: `harness_run [subcommand] [out-dir]`.

use helix_kmd::harness::{self, RunOptions, Subcommand};

fn main() {
    let sub = match std::env::args().nth(1).as_deref() {
        None | Some("residual-scan") => Subcommand::ResidualScan,
        Some("simulate-kmd") => Subcommand::SimulateKmd,
        Some("build-stream") => Subcommand::BuildStream,
        Some(other) => {
            eprintln!("unsupported here: {other}");
            std::process::exit(harness::EXIT_CONFIG);
        }
    };
    let out = std::env::args().nth(2).unwrap_or_else(|| "harness-example-out".into());
    let opts = RunOptions {
        out: Some(out.into()),
        ..Default::default()
    };
    match harness::run(sub, &opts) {
        Ok(s) => {
            s.lines.iter().for_each(|l| println!("{l}"));
            println!("wrote {} files", s.manifest.files.len());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(harness::exit_code(&e));
        }
    }
}
