use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bci_core::runner::{run, RunConfig};
use clap::Parser;

/// Convex-integration constructor for the Boussinesq system on the 3-torus.
///
/// Settings come from an optional `key = value` file; flags override it.
#[derive(Parser, Debug)]
#[command(name = "bci", version)]
struct Cli {
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// thm11 | thm12 | thm13 | relaxed
    #[arg(long)]
    preset: Option<String>,
    /// step | stage | outer | decay | check
    #[arg(long)]
    experiment: Option<String>,
    /// N or AxBxC.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    tsamples: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// One value (ramped over the stage) or a comma-separated list.
    #[arg(long)]
    lambda: Option<String>,
    /// Integer or `auto`.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// strict | trend
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Snapshot directory whose residual should be reported.
    #[arg(long)]
    check_residual: Option<PathBuf>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    // Seed first so a random velocity set later picks it up.
    let flags: [(&str, Option<String>); 12] = [
        ("seed", cli.seed.clone()),
        ("preset", cli.preset.clone()),
        ("experiment", cli.experiment.clone()),
        ("grid", cli.grid.clone()),
        ("tsamples", cli.tsamples.clone()),
        ("delta", cli.delta.clone()),
        ("lambda", cli.lambda.clone()),
        ("mu", cli.mu.clone()),
        ("steps", cli.steps.clone()),
        ("mode", cli.mode.clone()),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("check_residual", cli.check_residual.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v).with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k, v).with_context(|| format!("--set {kv}"))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| Ok(run(&cfg)?));
    match result {
        Ok(summary) => {
            print!("{}", summary.report);
            println!("output written to {}", summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
