use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod experiments;
mod manifest;
mod validate;

use config::{ConfigError, Experiment, ExperimentConfig, RawConfig, KNOWN_KEYS};
use experiments::Output;

/// Runs one experiment and writes long-format CSV plus a manifest.
///
/// Any config key can be overridden as `--key=value`.
#[derive(Parser, Debug)]
#[command(name = "nhbath", version)]
struct Args {
    /// Experiment name, config file, or a manifest.json from an earlier run.
    target: String,
    /// Output path prefix (default `out/<experiment>/`).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for the parallel parts.
    #[arg(long, env = "NHBATH_THREADS")]
    threads: Option<usize>,
    /// Print diagnostics and exit without running.
    #[arg(long)]
    check: bool,
}

enum Failure {
    Config(String),
    Numeric(nhbath::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<nhbath::Error> for Failure {
    fn from(e: nhbath::Error) -> Self {
        Failure::Numeric(e)
    }
}

/// Splits `--key=value` config overrides off the argument list.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        if let Some((k, v)) = a.strip_prefix("--").and_then(|s| s.split_once('=')) {
            if KNOWN_KEYS.contains(&k) && k != "output" {
                overrides.push((k.to_string(), v.to_string()));
                continue;
            }
        }
        rest.push(a);
    }
    (rest, overrides)
}

fn load(target: &str) -> Result<RawConfig, Failure> {
    if let Some(e) = Experiment::parse(target) {
        let mut raw = RawConfig::default();
        raw.set("experiment", e.name())?;
        return Ok(raw);
    }
    let text = std::fs::read_to_string(target)
        .map_err(|e| Failure::Config(format!("cannot read `{target}`: {e}")))?;
    if Path::new(target).extension().is_some_and(|x| x == "json") {
        return manifest::config_from_manifest(&text).map_err(Failure::Config);
    }
    Ok(RawConfig::parse(&text)?)
}

fn run(args: Args, overrides: Vec<(String, String)>) -> Result<(), Failure> {
    let mut raw = load(&args.target)?;
    for (k, v) in &overrides {
        raw.set(k, v)?;
    }
    let cfg = ExperimentConfig::resolve(raw)?;
    for d in validate::validate(&cfg) {
        eprintln!("{d}");
    }
    if args.check {
        return Ok(());
    }
    let prefix = args
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| format!("out/{}/", cfg.experiment.name()));
    let mut out = Output::new(&prefix)?;
    log::info!("running {} into {prefix}", cfg.experiment.name());
    experiments::run(&cfg, &mut out)?;
    manifest::write_manifest(&out.path("manifest.json"), &cfg, &out.files)?;
    for f in &out.files {
        println!("{}", out.path(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (argv, overrides) = split_overrides(std::env::args().collect());
    let args = Args::parse_from(argv);
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match run(args, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {} ({e})", e.name());
            ExitCode::from(3)
        }
    }
}
