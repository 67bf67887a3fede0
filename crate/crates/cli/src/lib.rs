//! Experiment runner behind the `grassdyn` binary.
//!
//! A run resolves a config (defaults, then the config file, then flags),
//! executes one command and wraps its results in a [`RunReport`].

pub mod app;
pub mod commands;
pub mod config;
pub mod report;

use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub use config::{
    load_config, parse_config, ClaimCheckConfig, OrbitDensityConfig, PhiTableConfig, SpectrumCirclesConfig,
    SummabilityConfig, VerifyConstructionConfig, WitnessConfig,
};
pub use report::{RunReport, SCHEMA};

/// Caps the worker pool when set to a positive integer.
pub const THREADS_ENV: &str = "GRASSDYN_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] grassdyn::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    OrbitDensity(OrbitDensityConfig),
    VerifyConstruction(VerifyConstructionConfig),
    ClaimCheck(ClaimCheckConfig),
    PhiTable(PhiTableConfig),
    Summability(SummabilityConfig),
    Witness(WitnessConfig),
    SpectrumCircles(SpectrumCirclesConfig),
}

fn echo<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("config serialises")
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OrbitDensity(_) => "orbit-density",
            Experiment::VerifyConstruction(_) => "verify-construction",
            Experiment::ClaimCheck(_) => "claim-check",
            Experiment::PhiTable(_) => "phi-table",
            Experiment::Summability(_) => "summability",
            Experiment::Witness(_) => "witness",
            Experiment::SpectrumCircles(_) => "spectrum-circles",
        }
    }

    fn params(&self) -> Value {
        match self {
            Experiment::OrbitDensity(c) => echo(c),
            Experiment::VerifyConstruction(c) => echo(c),
            Experiment::ClaimCheck(c) => echo(c),
            Experiment::PhiTable(c) => echo(c),
            Experiment::Summability(c) => echo(c),
            Experiment::Witness(c) => echo(c),
            Experiment::SpectrumCircles(c) => echo(c),
        }
    }

    /// The seed a randomised experiment draws from; `None` for exact commands.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::OrbitDensity(c) => Some(c.seed()),
            Experiment::Witness(WitnessConfig::ScShift(c)) => Some(c.seed),
            _ => None,
        }
    }

    pub fn set_seed(&mut self, s: u64) {
        match self {
            Experiment::OrbitDensity(c) => c.set_seed(s),
            Experiment::Witness(WitnessConfig::ScShift(c)) => c.seed = s,
            _ => {}
        }
    }

    fn execute(&self) -> Result<commands::Outcome, CliError> {
        match self {
            Experiment::OrbitDensity(c) => commands::orbit_density(c),
            Experiment::VerifyConstruction(c) => commands::verify(c),
            Experiment::ClaimCheck(c) => commands::claim_check(c),
            Experiment::PhiTable(c) => commands::phi_table(c),
            Experiment::Summability(c) => commands::summability(c),
            Experiment::Witness(c) => commands::witness(c),
            Experiment::SpectrumCircles(c) => commands::spectrum_circles(c),
        }
    }
}

/// Runs one experiment; the second value is its CSV rendering, if any.
pub fn run(exp: &Experiment) -> Result<(RunReport, Option<String>), CliError> {
    let start = Instant::now();
    let outcome = exp.execute()?;
    let report = RunReport {
        schema: SCHEMA.to_string(),
        experiment: exp.name().to_string(),
        params: exp.params(),
        seed: exp.seed().unwrap_or(0),
        results: outcome.results,
        pass: outcome.pass,
        wall_clock_ms: start.elapsed().as_millis() as u64,
    };
    Ok((report, outcome.csv))
}

/// Parses a [`THREADS_ENV`] value.
pub fn parse_threads(raw: &str) -> Result<usize, CliError> {
    raw.trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} = {raw:?} is not a positive integer")))
}

/// Installs the global worker pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n = parse_threads(&raw)?;
    // A pool installed earlier in the process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
