mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

/// Temporal-network surveillance: simulate, fit, calibrate and monitor.
#[derive(Parser, Debug)]
#[command(name = "netwatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set chart.lambda=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Master seed (beats the config file and NETWATCH_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Edge-list input (`t,src,dst`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Simulate a network series.
    Generate,
    /// Estimate the characteristic series of an edge list.
    Fit,
    /// Calibrate control limits by simulation.
    Calibrate,
    /// Run a control chart over an edge list.
    Monitor,
    /// Estimate conditional expected delay under an anomaly.
    EvaluateCed,
    /// Goodness-of-fit summary of a fitted window.
    Gof,
}

fn resolve(common: &Common) -> Result<(RunConfig, u64), CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref(), &common.set)?;
    if let Some(p) = &common.input {
        cfg.io.input = Some(p.clone());
    }
    if let Some(p) = &common.output_dir {
        cfg.io.output_dir = p.clone();
    }
    let env_seed = match std::env::var("NETWATCH_SEED") {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("NETWATCH_SEED `{s}` is not an unsigned integer")))?,
        ),
        Err(_) => None,
    };
    let seed = common.seed.or(cfg.seed).or(env_seed).unwrap_or(0);
    cfg.seed = Some(seed);
    Ok((cfg, seed))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, seed) = resolve(&cli.common)?;
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    std::fs::write(dir.join("resolved_config.toml"), cfg.to_toml())?;
    match cli.command {
        Command::Generate => commands::generate(&cfg, seed),
        Command::Fit => commands::fit(&cfg),
        Command::Calibrate => commands::calibrate(&cfg, seed),
        Command::Monitor => commands::monitor(&cfg),
        Command::EvaluateCed => commands::evaluate_ced(&cfg, seed),
        Command::Gof => commands::gof(&cfg, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netwatch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
