//! Batch front end for the `krylov-toda` library: one TOML config describes
//! one command, whose results are written as CSV/JSON artifacts with a manifest.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod run;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::ExperimentConfig;
pub use error::CliError;

/// Environment variable that overrides the config's output directory.
pub const OUT_ENV: &str = "KRYLOV_TODA_OUT";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Output directory precedence: flag, environment, config, then `out/<command>`.
pub fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("out").join(cfg.command.name()))
}

/// Parses, validates and executes a config file; returns the manifest path.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    run_config(ExperimentConfig::parse(&text)?, opts)
}

pub fn run_config(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<PathBuf, CliError> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let out = output_dir(&cfg, opts);
    let grids = cfg.validate()?;

    // the hash covers everything that determines the numbers, not where they go
    let mut effective = cfg.clone();
    effective.output = None;
    let canonical = serde_json::to_string(&effective).map_err(anyhow::Error::from)?;
    let header = json!({
        "command": cfg.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config_sha256": artifacts::sha256_hex(canonical.as_bytes()),
        "config": effective,
    });

    let threads = opts.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Other(e.into()))?;
    let produced = pool.install(|| run::execute(&cfg, &grids))?;
    artifacts::commit(&out, &produced, header)
}
