//! `yp`: reproducible experiments for power-type Young equations.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::Parser;

use commands::{plan, Command, Env, KNOWN_KEYS};
use config::{parse_seeds, ConfigError, RawConfig, Reader};
use output::{Format, Provenance};

#[derive(Debug, Parser)]
#[command(name = "yp", version, about = "Experiments for Young equations with power-type coefficients")]
struct Cli {
    /// Experiment to run; may instead be given as `command = ...` in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Flat `key = value` config file (supports `include <path>`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set hurst=0.7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed, list `0,3,5` or half-open range `0..20`.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads for seed-level parallelism.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<young_power::Error>() {
        Some(young_power::Error::CertificateFailed(_)) => 3,
        Some(
            young_power::Error::NonIntegrable(_)
            | young_power::Error::NonFinite(_)
            | young_power::Error::Factorization(_)
            | young_power::Error::DegenerateSampling(_),
        ) => 4,
        Some(
            young_power::Error::InvalidParameter(_)
            | young_power::Error::GridTooCoarse(_)
            | young_power::Error::Parse(_),
        ) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Value { key: o.clone(), msg: "expected KEY=VALUE".into() })?;
        raw.set(k.trim(), v.trim());
    }
    let command = match (cli.command, raw.get("command")) {
        (Some(c), Some(s)) if Command::parse(s) != Some(c) => {
            return Err(ConfigError::Value {
                key: "command".into(),
                msg: format!("config says `{s}` but `{}` was requested", c.name()),
            }
            .into())
        }
        (Some(c), _) => c,
        (None, Some(s)) => Command::parse(s).ok_or_else(|| ConfigError::Value {
            key: "command".into(),
            msg: format!("unknown command `{s}`"),
        })?,
        (None, None) => {
            return Err(ConfigError::Value { key: "command".into(), msg: "no command given".into() }.into())
        }
    };
    if let Some(s) = &cli.seed {
        raw.set("seeds", s.as_str());
    }
    let mut reader = Reader::new(&raw);
    reader.reject_unknown(KNOWN_KEYS)?;
    let seed_spec = reader.string("seeds").or_else(|| reader.string("seed")).unwrap_or_else(|| "0".into());
    let seeds = parse_seeds(&seed_spec).map_err(|msg| ConfigError::Value { key: "seeds".into(), msg })?;
    reader.materialize("seeds", &seed_spec);
    let job = plan(command, &mut reader)?;
    let env = Env {
        out_dir: cli.out_dir.clone(),
        format: cli.format,
        seeds,
        prov: Provenance::new(command.name(), reader.materialized),
    };
    log::info!("{} over {} seed(s) with {} job(s)", command.name(), env.seeds.len(), cli.jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    pool.install(|| job(&env))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("YP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
