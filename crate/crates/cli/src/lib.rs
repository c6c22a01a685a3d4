//! Config-driven experiment runner over the `skewflow` presets.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration
//! error, 3 I/O error. The JSON summary is written whenever the run gets
//! past configuration.

pub mod config;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use report::{Check, Report, TraceSink};
use skewflow::Error;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "skewflow", version, about = "Lyapunov exponents and Floquet data of positive skew-product semiflows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base-point seed; overrides `run.omega_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Preset name; overrides `system.preset`.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Write only the JSON summary.
    #[arg(long, global = true)]
    pub json_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Top exponent, and its dual counterpart where an adjoint exists.
    EstimateLyapunov,
    /// Pullback and dual Floquet vectors and an entire orbit.
    Floquet,
    /// Exponential separation gap.
    Separation,
    /// Structural assumptions, focusing, comparison, duality, Harnack.
    VerifyAssumptions,
    /// Estimators against characteristic-root and monodromy oracles.
    OracleCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EstimateLyapunov => "estimate-lyapunov",
            Command::Floquet => "floquet",
            Command::Separation => "separation",
            Command::VerifyAssumptions => "verify-assumptions",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::for_preset(name),
        (None, None) => return Err("either --config or --preset is required".into()),
    };
    if let Some(name) = &cli.preset {
        cfg.system.preset = name.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.run.omega_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.directory = out.clone();
    }
    if cli.json_only {
        cfg.outputs.csv = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Domain(_) | Error::Unsupported(_))
}

/// Runs one subcommand; returns the exit code.
pub fn run(cli: &Cli) -> u8 {
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let sys = match run::build(&cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut report = Report::new(&cfg.system.preset, cli.command.name(), cfg.run.omega_seed);
    let mut traces = Vec::new();
    if let Err(e) = run::execute(cli.command, &cfg, &sys, &mut report, &mut traces) {
        if is_config_error(&e) {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
        report.checks.push(Check {
            name: format!("run: {e}"),
            pass: false,
            margin: f64::NEG_INFINITY,
        });
    }

    let dir = &cfg.outputs.directory;
    let mut sink = TraceSink::new(dir, cfg.outputs.csv);
    let written = std::fs::create_dir_all(dir).and_then(|()| {
        for (name, bytes) in &traces {
            sink.write(name, bytes)?;
        }
        report.traces = std::mem::take(&mut sink.written);
        std::fs::write(dir.join(format!("{}.json", cli.command.name())), report.to_json())
    });
    if let Err(e) = written {
        eprintln!("i/o error under {}: {e}", dir.display());
        return EXIT_IO;
    }
    println!("{}", report.to_json());
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK
    }
}
