//! `noisewalk`: config-driven experiment runner.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{CapError, Experiment};
use config::{ConfigError, ExperimentConfig};
use output::OutputDir;

const EXIT_HELP: &str = "Exit codes:
  0  success
  1  other failure
  2  config parse or validation error
  3  resource cap exceeded (table size, flow edges, walk horizon)
  4  hypothesis violation (strict mode, or α ≥ λ̂ for separation)";

#[derive(Parser, Debug)]
#[command(name = "noisewalk", version, about = "Noisy random-walk coupling experiments", after_help = EXIT_HELP)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Treat failed measure hypotheses and a non-centered φ as errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact TV and 𝒰^s between π^ρ_n and μ_n⊗μ_n on the n grid.
    ExactTv,
    /// Escape rate, CLT, LIL windows, marginal gaps, joint ellipse.
    LimitLaws,
    /// Lower bounds on 𝒰^{αn}(π^ρ_n, π^ρ′_n) with exact cross-checks.
    Separation,
    /// Entropy of π^ρ_n, 1/n extrapolation and dimension estimates.
    Entropy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ExactTv => "exact-tv",
            Command::LimitLaws => "limit-laws",
            Command::Separation => "separation",
            Command::Entropy => "entropy",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<CapError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<noisewalk::Error>() {
            return match e {
                noisewalk::Error::TableCapExceeded { .. } | noisewalk::Error::EdgeCapExceeded { .. } => 3,
                noisewalk::Error::HypothesisViolation(_) => 4,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError("--config is required".into()))?;
    let config = ExperimentConfig::load(path, cli.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    pool.install(|| execute(cli, config))
}

fn execute(cli: &Cli, config: ExperimentConfig) -> Result<()> {
    let started = chrono::Utc::now();
    let hash = config.hash();
    let exp = Experiment::setup(config, cli.strict)?;
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = OutputDir::create(&cli.out)?;
    let name = cli.command.name();
    match cli.command {
        Command::ExactTv => {
            let r = commands::exact_tv::run(&exp, &mut out)?;
            out.write_json("summary.json", &exp.summary(name, r))?;
        }
        Command::LimitLaws => {
            let r = commands::limit_laws::run(&exp, &mut out)?;
            out.write_json("summary.json", &exp.summary(name, r))?;
        }
        Command::Separation => {
            let r = commands::separation::run(&exp, &mut out)?;
            out.write_json("summary.json", &exp.summary(name, r))?;
        }
        Command::Entropy => {
            let r = commands::entropy::run(&exp, &mut out)?;
            out.write_json("summary.json", &exp.summary(name, r))?;
        }
    }
    let records = out.finish(name, &hash, exp.seed(), &exp.snapshot, started)?;
    for r in &records {
        println!("{}  {}", r.sha256, cli.out.join(&r.path).display());
    }
    Ok(())
}
