//! Command-line front end: argument parsing, file loading and exit codes.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 request blocked,
//! 3 invalid input or arguments, 4 internal invariant violation (including a
//! walkthrough that no longer matches its reference tables).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use qrpad_core::netmodel::validate_substrate;
use qrpad_core::scenario::{run_simulation_with, Execution, Metric, SimulationConfig};
use qrpad_core::schema::{RequestDoc, SubstrateDoc};
use qrpad_core::{embed, Coefficients, EmbedError, SubstrateNetwork, VirtualRequest};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub mod example;
pub mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_BLOCKED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qrpad",
    version,
    about = "Anypath embedding of dataflow requests onto wireless substrates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the five-node walkthrough and check it against the reference tables.
    Example,
    /// Embed one request into a substrate and print the result as JSON.
    Embed {
        #[arg(long)]
        substrate: PathBuf,
        #[arg(long)]
        request: PathBuf,
        /// Coefficient file; the simulation defaults are used when omitted.
        #[arg(long)]
        coeffs: Option<PathBuf>,
    },
    /// Run the Monte-Carlo sweep and write CSV tables into a directory.
    Simulate {
        /// Simulation config; every field is optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run iterations one after another even when built with `parallel`.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a substrate file for structural problems.
    Validate {
        #[arg(long)]
        substrate: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match cli.command {
        Command::Example => example::run(out),
        Command::Embed {
            substrate,
            request,
            coeffs,
        } => run_embed(&substrate, &request, coeffs.as_deref(), out),
        Command::Simulate {
            config,
            out: dir,
            iterations,
            seed,
            sequential,
        } => run_simulate(config.as_deref(), &dir, iterations, seed, sequential, out),
        Command::Validate { substrate, json } => run_validate(&substrate, json, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

pub fn load_substrate(path: &Path) -> Result<SubstrateNetwork, CliError> {
    let doc: SubstrateDoc = read_json(path)?;
    SubstrateNetwork::from_doc(&doc).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_request(path: &Path) -> Result<VirtualRequest, CliError> {
    let doc: RequestDoc = read_json(path)?;
    VirtualRequest::from_doc(&doc).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_coefficients(path: Option<&Path>) -> Result<Coefficients, CliError> {
    let coeffs = match path {
        Some(p) => read_json(p)?,
        None => Coefficients::default(),
    };
    coeffs.validate().map_err(CliError::Input)?;
    Ok(coeffs)
}

#[derive(Serialize)]
struct BlockedDoc<'a> {
    status: &'static str,
    reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    service: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<&'a str>,
    message: String,
}

fn run_embed(substrate: &Path, request: &Path, coeffs: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut net = load_substrate(substrate)?;
    let req = load_request(request)?;
    let coeffs = load_coefficients(coeffs)?;
    match embed(&mut net, &req, &coeffs) {
        Ok(emb) => {
            write_json(out, &emb.to_doc(&net, &req))?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            let message = e.to_string();
            let doc = match &e {
                EmbedError::NoSuitableNode { service } => BlockedDoc {
                    status: "blocked",
                    reason: "no_suitable_node",
                    service: Some(service),
                    channel: None,
                    message,
                },
                EmbedError::NoFeasiblePath { channel } => BlockedDoc {
                    status: "blocked",
                    reason: "no_feasible_path",
                    service: None,
                    channel: Some(channel),
                    message,
                },
                // suitability was checked before reserving, so this is a bug
                EmbedError::Model(_) => return Err(CliError::Internal(message)),
            };
            write_json(out, &doc)?;
            Ok(EXIT_BLOCKED)
        }
    }
}

fn run_simulate(
    config: Option<&Path>,
    dir: &Path,
    iterations: Option<usize>,
    seed: Option<u64>,
    sequential: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut cfg: SimulationConfig = match config {
        Some(p) => read_json(p)?,
        None => SimulationConfig::default(),
    };
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(CliError::Input)?;
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };

    let start = Instant::now();
    let results = run_simulation_with(&cfg, exec);
    let elapsed = start.elapsed();
    output::write_results(dir, &results).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(
        out,
        "{:>5} {:>12} {:>12} {:>12} {:>8}",
        "load", "acceptance", "revenue", "cost", "R/C"
    )
    .map_err(io)?;
    for &load in &cfg.load_levels {
        let mean = |m| results.summary_for(load, m).map_or(f64::NAN, |r| r.mean);
        writeln!(
            out,
            "{:>5} {:>12.4} {:>12.1} {:>12.1} {:>8.4}",
            load,
            mean(Metric::AcceptanceRatio),
            mean(Metric::Revenue),
            mean(Metric::Cost),
            mean(Metric::RcRatio)
        )
        .map_err(io)?;
    }
    writeln!(
        out,
        "{} iterations in {:.2}s, tables written to {}",
        cfg.iterations,
        elapsed.as_secs_f64(),
        dir.display()
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn run_validate(substrate: &Path, json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let doc: SubstrateDoc = read_json(substrate)?;
    let report = validate_substrate(&doc);
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    if json {
        write_json(out, &report)?;
    } else if report.is_empty() {
        writeln!(out, "ok: {} nodes, {} links", doc.nodes.len(), doc.links.len()).map_err(io)?;
    } else {
        for v in &report {
            writeln!(out, "violation: {v}").map_err(io)?;
        }
    }
    Ok(if report.is_empty() { EXIT_OK } else { EXIT_INPUT })
}
