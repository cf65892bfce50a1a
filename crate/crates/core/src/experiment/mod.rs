//! Named experiments behind the command-line tool.

pub mod commands;
pub mod config;
pub mod table;

use std::path::Path;

use crate::error::{Error, Result};
use crate::error_exponent::RHO_TOLERANCE;
use crate::fbc_rate::RATE_TOLERANCE;
use crate::qos_region::BoundaryOptions;

pub use config::{ExperimentConfig, OutputFormat, Sweep};
pub use table::{Cell, Provenance, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ExponentCurve,
    EcSurface,
    Pareto,
    Tradeoff,
    QueueValidate,
    RateCurve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ExponentCurve => "exponent-curve",
            Command::EcSurface => "ec-surface",
            Command::Pareto => "pareto",
            Command::Tradeoff => "tradeoff",
            Command::QueueValidate => "queue-validate",
            Command::RateCurve => "rate-curve",
        }
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Table> {
    match command {
        Command::ExponentCurve => commands::exponent_curve(cfg),
        Command::EcSurface => commands::ec_surface(cfg),
        Command::Pareto => commands::pareto(cfg),
        Command::Tradeoff => commands::tradeoff(cfg),
        Command::QueueValidate => commands::queue_validate(cfg),
        Command::RateCurve => commands::rate_curve(cfg),
    }
}

pub fn provenance(command: Command, cfg: &ExperimentConfig) -> Provenance {
    Provenance {
        command: command.name().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_sha256: cfg.digest(),
        seed: cfg.mc.seed,
        samples: cfg.mc.samples,
        blocklength: cfg.blocklength,
        packet_size_bits: cfg.packet_size_bits,
        tolerances: vec![
            ("rate".into(), RATE_TOLERANCE),
            ("rho".into(), RHO_TOLERANCE),
            ("boundary".into(), BoundaryOptions::default().tolerance),
            ("ridge".into(), commands::RIDGE_TOLERANCE),
        ],
    }
}

/// Runs `command` and writes the rendered table to `out`, or returns it when
/// `out` is `None`.
pub fn execute(command: Command, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<String> {
    let text = run(command, cfg)?.render(&provenance(command, cfg), cfg.format);
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err.root_cause() {
        Error::InvalidConfig(_) | Error::Domain(_) => 2,
        Error::NumericRange { .. } => 3,
        Error::InfeasibleTarget(_) => 4,
        _ => 1,
    }
}
