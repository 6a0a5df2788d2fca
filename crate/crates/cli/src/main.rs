//! `fme`: runs forward mortality scenarios from a JSON config.
//!
//! Exit status: 0 success, 1 output I/O failure, 2 config error, 3 domain
//! error during the run, 4 diagnostics computed but failed (`validate`).

mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fme_core::config::ConfigFile;

use commands::{Context, Finished};
use error::{CliError, CliResult, EXIT_DIAGNOSTIC};
use output::{sha256_hex, unix_ms, RunManifest};

#[derive(Parser)]
#[command(name = "fme", version, about = "Forward mortality surface scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config (JSON, schema version 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `simulation.n_paths`.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads for path simulation; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and write summaries and diagnostics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also dump the final surfaces of the first N paths.
        #[arg(long, default_value_t = 0)]
        dump_paths: usize,
    },
    /// Write the consistency drift surfaces for the configured volatility.
    DriftTable {
        #[command(flatten)]
        common: Common,
    },
    /// Sample a cohort's death times and check them against its hazard.
    Cohort {
        #[command(flatten)]
        common: Common,
    },
    /// Value the configured survivor bonds and annuities.
    Price {
        #[command(flatten)]
        common: Common,
    },
    /// Run every applicable diagnostic and write a pass/fail report.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::DriftTable { .. } => "drift-table",
            Command::Cohort { .. } => "cohort",
            Command::Price { .. } => "price",
            Command::Validate { .. } => "validate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::DriftTable { common }
            | Command::Cohort { common }
            | Command::Price { common }
            | Command::Validate { common } => common,
        }
    }
}

fn load(common: &Common) -> CliResult<(Context, Vec<u8>)> {
    let path = &common.config;
    let raw = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw)
        .map_err(|_| CliError::config(format!("{} is not UTF-8", path.display())))?;
    let mut cfg = ConfigFile::from_json(text)?;
    if let Some(seed) = common.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(n) = common.paths {
        if n == 0 {
            return Err(CliError::config("--paths must be positive"));
        }
        cfg.simulation.n_paths = n;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((Context { cfg, base }, raw))
}

fn run(command: &Command) -> CliResult<bool> {
    let started = unix_ms();
    let common = command.common();
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("--threads: {e}")))?;
    }
    let (ctx, raw) = load(common)?;
    log::info!("{} with {}", command.name(), common.config.display());

    let Finished { outputs, passed } = match command {
        Command::Simulate { dump_paths, .. } => commands::simulate::run(&ctx, *dump_paths)?,
        Command::DriftTable { .. } => commands::drift_table::run(&ctx)?,
        Command::Cohort { .. } => commands::cohort::run(&ctx)?,
        Command::Price { .. } => commands::price::run(&ctx)?,
        Command::Validate { .. } => commands::validate::run(&ctx)?,
    };
    for name in outputs.names() {
        log::debug!("writing {name}");
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name().to_string(),
        config_file: common.config.display().to_string(),
        config_sha256: sha256_hex(&raw),
        seed: ctx.cfg.simulation.seed,
        n_paths: ctx.cfg.simulation.n_paths,
        threads: common.threads,
        status: if passed { "ok" } else { "diagnostics_failed" },
        started_unix_ms: started,
        finished_unix_ms: 0,
        outputs: Vec::new(),
    };
    outputs.commit(&common.out, manifest)?;
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FME_LOG_LEVEL", "warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fme: diagnostics failed; see the report in the output directory");
            ExitCode::from(EXIT_DIAGNOSTIC)
        }
        Err(e) => {
            eprintln!("fme: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
