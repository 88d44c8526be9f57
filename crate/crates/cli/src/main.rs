//! `sshqst`: edge-state transfer simulations from the command line.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! failures during a run.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Command, ConfigError, Format, RunConfig};
use crate::run::Manifest;

#[derive(Debug, Parser)]
#[command(
    name = "sshqst",
    version,
    about = "Rabi and Landau-Zener edge-state transfer on SSH / Rice-Mele chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master disorder seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Override a config field, e.g. `--set protocol.tau_z=150`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Validate and print the resolved configuration without running.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run the command named by the config's `experiment` key.
    Run,
    /// Full chain dynamics for one protocol; writes p1(t), p2N(t).
    Simulate,
    /// Reduced two-level (edge-mode) dynamics.
    TwoLevel,
    /// Disorder-free p2N over a two-parameter grid.
    #[command(name = "sweep2d")]
    Sweep2d,
    /// Disorder Monte Carlo for one protocol.
    Ensemble,
    /// Rabi and LZ ensembles over the same disorder realizations.
    Compare,
    /// LZ transfer versus chain length under a power-law time rule.
    Scaling,
    /// Rabi pulse length that satisfies the area theorem.
    AreaTime,
    /// Spectrum and mid-gap splitting of a static chain.
    Spectrum,
    /// Re-run from a manifest written by an earlier run.
    Replay {
        #[arg(value_name = "MANIFEST")]
        manifest: PathBuf,
    },
}

impl Sub {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Sub::Simulate => Command::Simulate,
            Sub::TwoLevel => Command::TwoLevel,
            Sub::Sweep2d => Command::Sweep2d,
            Sub::Ensemble => Command::Ensemble,
            Sub::Compare => Command::Compare,
            Sub::Scaling => Command::Scaling,
            Sub::AreaTime => Command::AreaTime,
            Sub::Spectrum => Command::Spectrum,
            Sub::Run | Sub::Replay { .. } => return None,
        })
    }
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig), Failure> {
    if let Sub::Replay { manifest } = &cli.command {
        if cli.config.is_some() || cli.seed.is_some() || !cli.overrides.is_empty() || cli.format.is_some() {
            return Err(Failure::Config(
                "replay takes its configuration from the manifest; only --out and --threads apply".into(),
            ));
        }
        let m = Manifest::read(manifest).map_err(|e| Failure::Config(format!("{e:#}")))?;
        let mut config = m.config;
        if let Some(out) = &cli.out {
            config.output.dir = out.clone();
        }
        return Ok((m.command, config));
    }
    let mut config = config::load(cli.config.as_deref(), &cli.overrides)?;
    let command = match cli.command.command() {
        Some(c) => c,
        None => config
            .experiment
            .ok_or_else(|| Failure::Config("`run` needs an `experiment` key in the config".into()))?,
    };
    config.experiment = Some(command);
    if let Some(seed) = cli.seed {
        config.disorder.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    Ok((command, config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = resolve(&cli).and_then(|(command, config)| {
        config.validate(command)?;
        if cli.dry_run {
            let text = toml::to_string(&config).map_err(|e| Failure::Runtime(e.into()))?;
            print!("{text}");
            return Ok(None);
        }
        if let Some(k) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| Failure::Runtime(e.into()))?;
        }
        log::info!(
            "running {} with {} threads",
            command.name(),
            rayon::current_num_threads()
        );
        run::execute(command, &config).map(Some).map_err(Failure::Runtime)
    });

    match outcome {
        Ok(Some(manifest)) => {
            log::info!(
                "wrote {} files in {:.3} s",
                manifest.files.len(),
                manifest.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
