//! Command-line experiment runner: one JSON config in, a directory of CSVs,
//! a summary and a hashed manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "fekete-gibbs", version, about = "Fekete points, Gibbs ensembles and their limits")]
struct Cli {
    command: Command,
    /// Run configuration (JSON). Optional for `report`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    if let Some(cfg) = &cfg {
        if cfg.command != cli.command {
            return Err(CliError::Config(format!(
                "config is for `{}`, not `{}`",
                cfg.command.name(),
                cli.command.name()
            )));
        }
    }
    if cli.command == Command::Report {
        let dir = cli
            .out
            .clone()
            .or_else(|| cfg.as_ref().and_then(|c| c.output.clone()))
            .ok_or_else(|| CliError::Config("report needs --out or a config with `output`".into()))?;
        let doc = report::report(&dir)?;
        for x in &doc.exclusions {
            eprintln!("warning: excluded {}: {}", x.run, x.reason);
        }
        if doc.warnings > 0 {
            eprintln!("{} warning(s)", doc.warnings);
        }
        return Ok(());
    }
    let path = cli.config.clone().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = cfg.expect("loaded above");
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.output = Some(out.clone());
    let ctx = commands::Context {
        config_dir: path.parent().map(|p| p.to_path_buf()).unwrap_or_default(),
        out,
    };
    match cfg.execution.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Config(format!("workers: {e}")))?;
            pool.install(|| commands::run(&cfg, &ctx))
        }
        None => commands::run(&cfg, &ctx),
    }
}
