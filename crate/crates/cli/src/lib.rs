//! `muskat` driver: reads a run configuration, runs the ordered validators,
//! and dispatches to a subcommand that writes CSV/JSON outputs. Every run,
//! successful or not, leaves `<subcommand>.manifest.json` in the output
//! directory.

pub mod commands;
pub mod config;
pub mod pipeline;

use clap::{Parser, Subcommand};
use commands::{CmdError, ErrorKind, Sink};
use config::RunConfig;
use pipeline::{Status, Step, Verdict};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "muskat", version, about = "Corner spectra, weight windows, the Mellin symbol and interface evolution for the two-phase contact Muskat problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration: `key = value` lines grouped under `[section]` headers.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run even when a validator the subcommand depends on fails.
    #[arg(long, global = true)]
    pub force: bool,
    /// Seed for randomly sampled evaluation points.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Zeros of S± for the contact corners (or the `[corner]` model corner).
    Spectrum,
    /// Admissible windows for s* and s, and the chosen weight.
    Weights,
    /// 𝒢 identity checks, V₀ functional-equation residuals and decay.
    Symbol,
    /// Initial pressure, h4, corner ratios αᵢ and linearized coefficients.
    SolveInitial,
    /// Interface evolution and the waiting-time diagnostics.
    Evolve,
    /// Aggregate every JSON output in the output directory.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Weights => "weights",
            Command::Symbol => "symbol",
            Command::SolveInitial => "solve-initial",
            Command::Evolve => "evolve",
            Command::Report => "report",
        }
    }

    /// Validators whose failure stops this subcommand.
    pub fn gates(self, cfg: &RunConfig) -> Vec<Step> {
        use Step::*;
        match self {
            Command::Spectrum | Command::Symbol if cfg.corner.is_some() => vec![],
            Command::Spectrum | Command::Symbol => vec![Spectra],
            Command::Weights => vec![Data, Spectra, Windows, Weight],
            Command::SolveInitial => vec![Geometry, Data, Solve, H4],
            Command::Evolve => vec![Geometry, Data, Solve, H4, Spectra, Windows, Weight],
            Command::Report => vec![],
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    config_path: Option<String>,
    seed: u64,
    forced: bool,
    config: Option<BTreeMap<String, String>>,
    config_errors: Vec<String>,
    gated_on: Vec<Step>,
    verdicts: Vec<Verdict>,
    warnings: Vec<String>,
    outputs: Vec<String>,
    work: BTreeMap<String, u64>,
    outcome: &'static str,
    exit_code: u8,
    error: Option<String>,
}

fn outcome(kind: Option<ErrorKind>) -> &'static str {
    match kind {
        None => "ok",
        Some(ErrorKind::Validation) => "validation_failure",
        Some(ErrorKind::Numerical) => "numerical_failure",
        Some(ErrorKind::Io) => "io_failure",
    }
}

/// Runs one invocation and returns the process exit code: 0 ok,
/// 2 validation failure, 3 numerical failure, 1 I/O failure.
pub fn run(cli: &Cli) -> u8 {
    let mut m = Manifest {
        tool: "muskat",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        seed: cli.seed,
        forced: cli.force,
        config: None,
        config_errors: Vec::new(),
        gated_on: Vec::new(),
        verdicts: Vec::new(),
        warnings: Vec::new(),
        outputs: Vec::new(),
        work: BTreeMap::new(),
        outcome: "ok",
        exit_code: 0,
        error: None,
    };
    let cfg = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(c) => Some(c),
            Err(e) => {
                m.config_errors = e.0.iter().map(|i| i.to_string()).collect();
                None
            }
        },
        None if cli.command == Command::Report => None,
        None => {
            m.config_errors.push(format!("`{}` needs --config PATH", cli.command.name()));
            None
        }
    };
    let out = cli.out.clone().or_else(|| cfg.as_ref().map(|c| c.out_dir.clone())).unwrap_or_else(|| PathBuf::from("out"));
    let mut sink = match Sink::new(&out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("muskat: cannot create {}: {}", out.display(), e.message);
            return ErrorKind::Io.exit_code();
        }
    };

    let result = if !m.config_errors.is_empty() {
        for e in &m.config_errors {
            eprintln!("muskat: config: {e}");
        }
        Err(CmdError::validation(format!("invalid configuration ({} issue(s))", m.config_errors.len())))
    } else {
        dispatch(cli, cfg.as_ref(), &mut m, &mut sink)
    };

    let kind = result.as_ref().err().map(|e| e.kind);
    m.outcome = outcome(kind);
    m.exit_code = kind.map_or(0, ErrorKind::exit_code);
    m.error = result.err().map(|e| e.message);
    if let Some(msg) = &m.error {
        eprintln!("muskat {}: {msg}", cli.command.name());
    }
    for w in &m.warnings {
        eprintln!("muskat {}: warning: {w}", cli.command.name());
    }
    m.work = std::mem::take(&mut sink.work);
    let manifest = format!("{}.manifest.json", cli.command.name());
    m.outputs = sink.files.clone();
    m.outputs.push(manifest.clone());
    if let Err(e) = sink.json(&manifest, &m) {
        eprintln!("muskat: cannot write manifest: {}", e.message);
        return ErrorKind::Io.exit_code();
    }
    m.exit_code
}

fn dispatch(cli: &Cli, cfg: Option<&RunConfig>, m: &mut Manifest, sink: &mut Sink) -> Result<Value, CmdError> {
    let Some(cfg) = cfg else {
        return commands::report(sink);
    };
    m.config = Some(cfg.echo());
    let p = pipeline::validate(cfg);
    let gates = cli.command.gates(cfg);
    let blocking: Vec<&Verdict> = gates.iter().map(|s| p.verdict(*s)).filter(|v| v.blocks()).collect();
    for v in &p.verdicts {
        if v.status == Status::Overridden {
            m.warnings.push(format!("{}: {}", v.assumptions, v.message));
        }
    }
    m.gated_on = gates;
    m.verdicts = p.verdicts.clone();
    if !blocking.is_empty() {
        // a skipped step inherits the kind of the first upstream failure
        let first_failure = p.verdicts.iter().find_map(|v| (v.status == Status::Fail).then_some(v.failure).flatten());
        let kind = blocking.iter().find_map(|v| v.failure).or(first_failure).map_or(ErrorKind::Validation, ErrorKind::from);
        let msg = blocking.iter().map(|v| format!("{} {:?}: {}", v.assumptions, v.status, v.message)).collect::<Vec<_>>().join("; ");
        if !cli.force {
            return Err(CmdError { kind, message: msg });
        }
        m.warnings.push(format!("forced past failed validators: {msg}"));
    }
    match cli.command {
        Command::Spectrum => commands::spectrum(cfg, &p, sink),
        Command::Weights => commands::weights(cfg, &p, sink),
        Command::Symbol => commands::symbol(cfg, &p, cli.seed, sink),
        Command::SolveInitial => commands::solve_initial(cfg, &p, sink),
        Command::Evolve => commands::evolve(cfg, &p, sink),
        Command::Report => commands::report(sink),
    }
}
