use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use krylov_toda::io::compare_csv;
use krylov_toda_cli::{run_file, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "krylov-toda", version, about = "Krylov complexity and Toda flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory, overriding the config and KRYLOV_TODA_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Column-wise deviations of CSV `a` from reference `b`; exits 1 when out of tolerance.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 0.0)]
        atol: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Cmd::Run { config, threads, out, seed } => {
            if threads == Some(0) {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            let manifest = run_file(&config, &RunOptions { threads, out, seed })?;
            println!("{}", manifest.display());
            Ok(0)
        }
        Cmd::Compare { a, b, rtol, atol } => {
            if !(rtol >= 0.0 && atol >= 0.0) {
                return Err(CliError::Config("tolerances must be non-negative".into()));
            }
            let report = compare_csv(&a, &b, rtol, atol)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}
