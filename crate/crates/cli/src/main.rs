//! `rsdlab`: runs consistency checks, equilibrium analyses, simulations and
//! the reproduction suites from a JSON config, writing JSON and CSV results
//! plus a run manifest.
//!
//! Exit codes: 0 when every checked claim holds, 1 when one is violated or
//! could not be verified (including exceeded resource budgets), 2 on input
//! errors.

mod commands;
mod config;
mod output;
mod reproduce;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{parse_range, ExperimentConfig, Method, ReproduceParams};
use rsd_core::exact::{parse_exact, Wire};
use std::path::PathBuf;
use std::process::ExitCode;

/// An error in the caller's input: exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(
    name = "rsdlab",
    version,
    about = "Ranking-technology hiring games under random serial dictatorship"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (required for stochastic runs).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Force exact evaluation.
    #[arg(long, global = true, conflicts_with = "method")]
    exact: bool,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Equilibrium tolerance, e.g. `0.001` or `1/1000`.
    #[arg(long, global = true, value_parser = parse_wire)]
    epsilon: Option<Wire>,
    #[arg(long, global = true)]
    confidence: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: $RSDLAB_OUT, then ./rsdlab-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Stochastic-consistency check of technologies at value vectors.
    CheckSc,
    /// Consistency deficit delta* of a technology space or a game.
    MeasureDelta,
    /// Equilibria, optimum and price of anarchy against the delta* bound.
    Poa,
    /// Pure (epsilon-)equilibria and dominant strategies.
    FindEquilibria,
    /// Expected utilities of profiles.
    Simulate,
    /// Incentive-compatibility audit of obedient play.
    IcAudit,
    /// (1,1)-smoothness over all ordered profile pairs.
    Smoothness,
    /// Generate, verify and evaluate a documented instance family.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    which: reproduce::Which,
    /// Firm counts, `a..b` inclusive or a single value.
    #[arg(long, value_parser = parse_range)]
    n: Option<(usize, usize)>,
    #[arg(long, value_parser = parse_wire)]
    eta: Option<Wire>,
    #[arg(long, value_parser = parse_wire)]
    eps: Option<Wire>,
    /// Dispersions, comma separated.
    #[arg(long, value_parser = parse_wire, value_delimiter = ',')]
    phi: Vec<Wire>,
    #[arg(long, value_enum)]
    preset: Option<reproduce::Preset>,
    /// Number of random instances.
    #[arg(long)]
    count: Option<usize>,
}

fn parse_wire(s: &str) -> Result<Wire, String> {
    parse_exact(s).map(Wire).map_err(|e| e.to_string())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckSc => "check-sc",
        Command::MeasureDelta => "measure-delta",
        Command::Poa => "poa",
        Command::FindEquilibria => "find-equilibria",
        Command::Simulate => "simulate",
        Command::IcAudit => "ic-audit",
        Command::Smoothness => "smoothness",
        Command::Reproduce(_) => "reproduce",
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.samples.is_some() {
        cfg.samples = c.samples;
    }
    if c.exact {
        cfg.method = Method::Exact;
    }
    if let Some(m) = c.method {
        cfg.method = match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Mc => Method::Mc,
        };
    }
    if c.epsilon.is_some() {
        cfg.epsilon = c.epsilon.clone();
    }
    if c.confidence.is_some() {
        cfg.confidence = c.confidence;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Command::Reproduce(r) = &cli.command {
        let mut p = cfg.reproduce.take().unwrap_or_default();
        p.which = r.which.name().to_string();
        if r.n.is_some() {
            p.n = r.n;
        }
        if r.eta.is_some() {
            p.eta = r.eta.clone();
        }
        if r.eps.is_some() {
            p.eps = r.eps.clone();
        }
        if !r.phi.is_empty() {
            p.phi = r.phi.clone();
        }
        if let Some(preset) = r.preset {
            p.preset = Some(preset.name().to_string());
        }
        if r.count.is_some() {
            p.count = r.count;
        }
        cfg.reproduce = Some(p);
    } else if cfg.reproduce.is_some() {
        return Err(InputError("\"reproduce\" parameters given to another command".into()).into());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = effective_config(&cli)?;
    if let Some(w) = cfg.workers {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    let name = command_name(&cli.command);
    let command = match &cli.command {
        Command::Reproduce(r) => format!("{name} {}", r.which.name()),
        _ => name.to_string(),
    };
    let hash = output::sha256_hex(&cfg.canonical_bytes()?);
    let mut run = output::Run::create(&cfg.out_dir())?;
    run.json("config.json", &cfg.canonical())?;
    let result = match &cli.command {
        Command::CheckSc => commands::check_sc(&cfg, &mut run),
        Command::MeasureDelta => commands::measure_delta(&cfg, &mut run),
        Command::Poa => commands::poa(&cfg, &mut run),
        Command::FindEquilibria => commands::find_equilibria(&cfg, &mut run),
        Command::Simulate => commands::simulate(&cfg, &mut run),
        Command::IcAudit => commands::ic_audit(&cfg, &mut run),
        Command::Smoothness => commands::smoothness(&cfg, &mut run),
        Command::Reproduce(_) => {
            let params: &ReproduceParams = cfg.reproduce.as_ref().expect("set above");
            reproduce::run(&cfg, params, &mut run)
        }
    };
    // the manifest is written even when the command fails
    if let Err(e) = &result {
        run.suite("run", false, format!("{e:#}"));
    }
    let passed = run.finish(&command, hash, cfg.seed)?;
    result.map(|()| passed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<rsd_core::Error>() {
        Some(
            rsd_core::Error::InvalidInput(_)
            | rsd_core::Error::InvalidPolicy(_)
            | rsd_core::Error::Unsupported(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
