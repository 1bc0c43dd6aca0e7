//! Command-line front end.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 configuration error, 3 numeric or
//! domain error, 4 failed `validate` checks. Errors are reported on stderr as
//! one JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::asym::{RateEval, RunningMaxReport};
use crate::error::Error;
use crate::experiments::{
    run_annealed_experiment, run_asymptotics, run_quenched_experiment, run_sample_env, run_speed, run_tail_check,
    run_validation, write_records, AnnealedRecord, ExperimentConfig, Format, QuenchedRecord, SiteRecord, SpeedRecord,
    TailRecord, TailSummary, TOOLKIT_VERSION,
};

/// Configuration used by `validate` when no `--config` is given.
pub const VALIDATE_FIXTURE: &str = include_str!("../fixtures/validate.toml");

#[derive(Debug, Parser)]
#[command(name = "hopwalk", version, about = "Slowdown estimates for biased random walks with random holding times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the sites of one sampled environment.
    SampleEnv(RunArgs),
    /// Estimate the speed X_t / t.
    Speed(RunArgs),
    /// Quenched slowdown bounds, oracle and Monte Carlo over a t sweep.
    SlowdownQuenched(RunArgs),
    /// Annealed slowdown with the planted estimator over a t sweep.
    SlowdownAnnealed(RunArgs),
    /// Tabulate h(t), M(t) and the predicted exponents.
    Asymptotics(RunArgs),
    /// Monte Carlo check of the weighted tail-sum estimate.
    TailCheck(RunArgs),
    /// Run the sandwich suite on a configuration (default: bundled fixture).
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Output files to write.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Comma-separated t values replacing every t grid in the config.
    #[arg(long, value_name = "T,...", value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// TOML configuration with a [slowdown] section.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory for validation.json; nothing is written when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Master seed overriding the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            Error::Io(_) => 1,
            _ => 3,
        };
        Failure { code, kind: e.kind(), message: e.to_string() }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    toolkit_version: &'static str,
    subcommand: &'a str,
    config_hash: String,
    seed: u64,
    jobs: usize,
    started_unix: u64,
    elapsed_secs: f64,
    files: Vec<String>,
    streams: &'static str,
}

const STREAMS: &str = "environment i: derive(seed, 1, i); walk replicas: ChaCha8 stream i of a derived key (tag 2); planted draws: tag 3; tail and running-max trials: tag 4";

/// Parses `std::env::args` and runs the requested subcommand.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli))
}

/// Runs a parsed invocation and returns the exit code.
pub fn run(cli: Cli) -> u8 {
    let verbose = match &cli.command {
        Command::Validate(v) => v.common.verbose,
        Command::SampleEnv(r)
        | Command::Speed(r)
        | Command::SlowdownQuenched(r)
        | Command::SlowdownAnnealed(r)
        | Command::Asymptotics(r)
        | Command::TailCheck(r) => r.common.verbose,
    };
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            let report = ErrorReport { error: f.kind, message: &f.message, exit_code: f.code };
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            f.code
        }
    }
}

fn load_config(text: &str, common: &CommonArgs, t_grid: Option<&[f64]>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_toml(text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(grid) = t_grid {
        cfg.override_t_grid(grid)?;
    }
    Ok(cfg)
}

fn read_config(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        kind: "config",
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    if jobs == Some(0) {
        return Err(Failure { code: 2, kind: "config", message: "--jobs must be >= 1".into() });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure { code: 1, kind: "io", message: e.to_string() })
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (name, args) = match command {
        Command::Validate(v) => return validate(v),
        Command::SampleEnv(r) => ("sample-env", r),
        Command::Speed(r) => ("speed", r),
        Command::SlowdownQuenched(r) => ("slowdown-quenched", r),
        Command::SlowdownAnnealed(r) => ("slowdown-annealed", r),
        Command::Asymptotics(r) => ("asymptotics", r),
        Command::TailCheck(r) => ("tail-check", r),
    };
    let text = read_config(&args.config)?;
    let cfg = load_config(&text, &args.common, args.t_grid.as_deref())?;
    let pool = pool(args.common.jobs)?;
    let hash = cfg.hash();
    let (out, format) = (args.out.as_path(), args.format);

    // The pipeline runs to completion before the output directory is
    // touched, so a failing run leaves nothing behind.
    let outcome = pool.install(|| compute(name, &cfg))?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    let files = write_outcome(outcome, out, &hash, format)?;

    let meta = RunMeta {
        toolkit_version: TOOLKIT_VERSION,
        subcommand: name,
        config_hash: hash,
        seed: cfg.seed,
        jobs: pool.current_num_threads(),
        started_unix,
        elapsed_secs: started.elapsed().as_secs_f64(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
        streams: STREAMS,
    };
    std::fs::write(out.join("run.meta.json"), serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")
        .map_err(Error::from)?;
    for f in &files {
        println!("{}", f.display());
    }
    Ok(0)
}

enum Outcome {
    Sites(Vec<SiteRecord>),
    Speed(Vec<SpeedRecord>),
    Quenched(Vec<QuenchedRecord>),
    Annealed(Vec<AnnealedRecord>),
    Rates(Vec<RateEval>, Option<RunningMaxReport>),
    Tail(Vec<TailRecord>, TailSummary),
}

fn compute(name: &str, cfg: &ExperimentConfig) -> crate::Result<Outcome> {
    Ok(match name {
        "sample-env" => Outcome::Sites(run_sample_env(cfg)?),
        "speed" => Outcome::Speed(run_speed(cfg)?),
        "slowdown-quenched" => Outcome::Quenched(run_quenched_experiment(cfg)?),
        "slowdown-annealed" => Outcome::Annealed(run_annealed_experiment(cfg)?),
        "asymptotics" => {
            let (rates, max) = run_asymptotics(cfg)?;
            Outcome::Rates(rates, max)
        }
        "tail-check" => {
            let (records, summary) = run_tail_check(cfg)?;
            Outcome::Tail(records, summary)
        }
        _ => unreachable!("subcommand names are fixed in dispatch"),
    })
}

fn write_outcome(outcome: Outcome, out: &Path, hash: &str, format: Format) -> crate::Result<Vec<PathBuf>> {
    match outcome {
        Outcome::Sites(r) => write_records(out, "environment", &r, hash, format),
        Outcome::Speed(r) => write_records(out, "speed", &r, hash, format),
        Outcome::Quenched(r) => write_records(out, "quenched", &r, hash, format),
        Outcome::Annealed(r) => write_records(out, "annealed", &r, hash, format),
        Outcome::Rates(rates, max) => {
            let mut files = write_records(out, "rates", &rates, hash, format)?;
            if let Some(m) = max {
                files.extend(write_records(out, "running_max", &[m], hash, format)?);
            }
            Ok(files)
        }
        Outcome::Tail(records, summary) => {
            let mut files = write_records(out, "tail", &records, hash, format)?;
            let path = out.join("tail_summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
            files.push(path);
            Ok(files)
        }
    }
}

fn validate(args: ValidateArgs) -> Result<u8, Failure> {
    let text = match &args.config {
        Some(p) => read_config(p)?,
        None => VALIDATE_FIXTURE.to_string(),
    };
    let cfg = load_config(&text, &args.common, None)?;
    let pool = pool(args.common.jobs)?;
    let report = pool.install(|| run_validation(&cfg))?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(Error::from)?;
        let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        std::fs::write(out.join("validation.json"), body).map_err(Error::from)?;
    }
    if report.passed() {
        Ok(0)
    } else {
        Err(Failure {
            code: 4,
            kind: "validation",
            message: format!(
                "{} of {} checks failed",
                report.checks.iter().filter(|c| !c.passed).count(),
                report.checks.len()
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn fixture_parses() {
        let cfg = ExperimentConfig::from_toml(VALIDATE_FIXTURE).unwrap();
        assert!(cfg.slowdown.is_some());
    }
}
