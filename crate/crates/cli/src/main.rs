//! `seroprev`: seroprevalence estimation under an imperfect diagnostic test.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 the Bayesian
//! sampler did not converge (the report is still written).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use seroprev::config::{self, AnalysisConfig};
use seroprev::figure::{render_figure, FigureFormat};
use seroprev::report::{render_report, run_analysis, Method, ReportFormat};
use seroprev::simulation::{run_scenario, ScenarioSpec};
use seroprev::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "seroprev", version, about = "Seroprevalence estimation with an imperfect diagnostic test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the requested estimators over a configuration file and write a report.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of mle, rao, cp, bayes (or "all").
        #[arg(long, default_value = "all")]
        methods: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// text, json or csv; inferred from the --out extension when omitted.
        #[arg(long)]
        format: Option<String>,
        /// Overrides the MCMC seed in the configuration.
        #[arg(long, env = "SEROPREV_SEED")]
        seed: Option<u64>,
    },
    /// Monte Carlo study of the fixed-accuracy estimators.
    Simulate {
        /// JSON scenario: true_theta, acc {sensitivity, specificity}, n_samples,
        /// and optionally alpha, n_replications, seed.
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides n_replications in the scenario.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, env = "SEROPREV_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot per-survey intervals against the confirmed-case line.
    Figure {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// svg or csv; inferred from the --out extension when omitted.
        #[arg(long)]
        format: Option<String>,
        #[arg(long, default_value = "cp,bayes")]
        methods: String,
        #[arg(long, env = "SEROPREV_SEED")]
        seed: Option<u64>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { EXIT_INVALID } else { EXIT_FAILURE };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILURE, error }
    }
}

fn extension(path: Option<&Path>) -> Option<&str> {
    path.and_then(|p| p.extension()).and_then(|e| e.to_str())
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    use anyhow::Context;
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<AnalysisConfig, Failure> {
    let mut config = config::ingest(path)?;
    if let Some(seed) = seed {
        config.mcmc.seed = seed;
    }
    Ok(config)
}

fn analyze(
    config: &Path,
    methods: &str,
    out: Option<&Path>,
    format: Option<&str>,
    seed: Option<u64>,
) -> Result<u8, Failure> {
    let format: ReportFormat = format.or(extension(out)).unwrap_or("text").parse()?;
    let methods = Method::parse_list(methods)?;
    let config = load_config(config, seed)?;
    let bundle = run_analysis(&config, &methods)?;
    write_output(out, &render_report(&bundle, format)?)?;
    for note in &bundle.annotations {
        eprintln!("warning: {note}");
    }
    Ok(if bundle.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn simulate(scenario: &Path, reps: Option<u64>, seed: Option<u64>, out: Option<&Path>) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(scenario).map_err(Error::from)?;
    let mut spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { what: scenario.display().to_string(), reason: e.to_string() })?;
    if let Some(reps) = reps {
        spec.n_replications = reps;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let report = run_scenario(&spec)?;
    let json = serde_json::json!({ "scenario": spec, "report": report });
    let mut text = serde_json::to_string_pretty(&json).map_err(anyhow::Error::from)?;
    text.push('\n');
    write_output(out, &text)?;
    Ok(0)
}

fn figure(config: &Path, out: &Path, format: Option<&str>, methods: &str, seed: Option<u64>) -> Result<u8, Failure> {
    let format: FigureFormat = format.or(extension(Some(out))).unwrap_or("svg").parse()?;
    let methods = Method::parse_list(methods)?;
    let config = load_config(config, seed)?;
    let bundle = run_analysis(&config, &methods)?;
    let text = match render_figure(&bundle, &config.timeline_or_surveys(), format) {
        Err(e @ Error::NothingToPlot(_)) => return Err(Failure { code: EXIT_INVALID, error: e.into() }),
        other => other?,
    };
    write_output(Some(out), &text)?;
    for note in &bundle.annotations {
        eprintln!("warning: {note}");
    }
    Ok(if bundle.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { config, methods, out, format, seed } => {
            analyze(config, methods, out.as_deref(), format.as_deref(), *seed)
        }
        Command::Simulate { scenario, reps, seed, out } => simulate(scenario, *reps, *seed, out.as_deref()),
        Command::Figure { config, out, format, methods, seed } => {
            figure(config, out, format.as_deref(), methods, *seed)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
