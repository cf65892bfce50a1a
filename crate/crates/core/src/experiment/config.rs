//! Experiment configuration file.
//!
//! A TOML document with a section per module. Unknown keys are rejected and
//! every grid that is given must be nonempty and strictly increasing; grids
//! that are left out fall back to the defaults of the command that uses them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelConfig, DEFAULT_NOISE_POWER};
use crate::effective_capacity::{DEFAULT_SWEEP_POINTS, DEFAULT_THETA_ERR_MAX};
use crate::error::{Error, Result};
use crate::montecarlo::MonteCarloSpec;

pub const DEFAULT_PACKET_SIZE_BITS: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Optimal ϑ against the delay exponent.
    #[default]
    Theta,
    /// Optimal ϑ subject to `e^{−nϑ} ≤ ε` against the error target ε.
    Eps,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn noise() -> f64 {
    DEFAULT_NOISE_POWER
}

/// Channel section. Exactly one of `snr_db` and `power` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub n_tx: usize,
    pub n_rx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default = "one")]
    pub distance: f64,
    #[serde(default = "two")]
    pub path_exponent: f64,
    #[serde(default = "noise")]
    pub noise_power: f64,
    #[serde(default = "one")]
    pub large_scale: f64,
}

impl ChannelSection {
    pub fn resolve(&self) -> Result<ChannelConfig> {
        let power = match (self.snr_db, self.power) {
            (Some(db), None) => {
                if !db.is_finite() {
                    return Err(Error::config("channel.snr_db must be finite"));
                }
                self.noise_power * 10f64.powf(db / 10.0) * self.distance.powf(self.path_exponent)
            }
            (None, Some(p)) => p,
            _ => return Err(Error::config("channel needs exactly one of snr_db and power")),
        };
        let cfg = ChannelConfig {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            power,
            distance: self.distance,
            path_exponent: self.path_exponent,
            noise_power: self.noise_power,
            large_scale: self.large_scale,
        };
        cfg.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            n_tx: 1,
            n_rx: 1,
            snr_db: Some(10.0),
            power: None,
            distance: 1.0,
            path_exponent: 2.0,
            noise_power: DEFAULT_NOISE_POWER,
            large_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Coding rates in bits per channel use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_delay: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_err: Option<Vec<f64>>,
    /// Region levels `u < 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocklengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_probs: Option<Vec<f64>>,
}

fn default_arrival_factor() -> f64 {
    0.9
}
fn default_blocks() -> usize {
    1_000_000
}
fn default_replications() -> usize {
    3
}
fn default_queue_theta_delay() -> f64 {
    3e-3
}
fn default_queue_theta_err() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSection {
    #[serde(default = "default_queue_theta_delay")]
    pub theta_delay: f64,
    #[serde(default = "default_queue_theta_err")]
    pub theta_err: f64,
    /// Arrivals per block as a multiple of `n·EC(θ, ϑ)`.
    #[serde(default = "default_arrival_factor")]
    pub arrival_factor: f64,
    /// Explicit arrivals in bits per block; overrides `arrival_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_bits: Option<f64>,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[serde(default = "default_replications")]
    pub replications: usize,
}

impl Default for QueueSection {
    fn default() -> Self {
        Self {
            theta_delay: default_queue_theta_delay(),
            theta_err: default_queue_theta_err(),
            arrival_factor: default_arrival_factor(),
            arrival_bits: None,
            blocks: default_blocks(),
            replications: default_replications(),
        }
    }
}

fn default_theta_err_max() -> f64 {
    DEFAULT_THETA_ERR_MAX
}
fn default_sweep_points() -> usize {
    DEFAULT_SWEEP_POINTS
}
fn default_tradeoff_theta_delay() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSection {
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "default_theta_err_max")]
    pub theta_err_max: f64,
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
    /// Delay exponent held fixed in the ε sweep.
    #[serde(default = "default_tradeoff_theta_delay")]
    pub theta_delay: f64,
}

impl Default for TradeoffSection {
    fn default() -> Self {
        Self {
            sweep: Sweep::Theta,
            theta_err_max: default_theta_err_max(),
            sweep_points: default_sweep_points(),
            theta_delay: default_tradeoff_theta_delay(),
        }
    }
}

fn default_rate_error_prob() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCurveSection {
    /// Error target of the blocklength sweep.
    #[serde(default = "default_rate_error_prob")]
    pub error_prob: f64,
}

impl Default for RateCurveSection {
    fn default() -> Self {
        Self { error_prob: default_rate_error_prob() }
    }
}

fn default_blocklength() -> usize {
    200
}
fn default_mc() -> MonteCarloSpec {
    MonteCarloSpec { samples: 10_000, seed: 1, antithetic: false }
}
fn default_packet_size() -> f64 {
    DEFAULT_PACKET_SIZE_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_blocklength")]
    pub blocklength: usize,
    #[serde(default)]
    pub format: OutputFormat,
    /// Destination file; not part of the digest, so the same experiment
    /// written to two places carries the same header.
    #[serde(default, skip_serializing)]
    pub output_path: Option<String>,
    /// Packet size carried as metadata only.
    #[serde(default = "default_packet_size")]
    pub packet_size_bits: f64,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default = "default_mc")]
    pub mc: MonteCarloSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub queue: QueueSection,
    #[serde(default)]
    pub tradeoff: TradeoffSection,
    #[serde(default)]
    pub rate_curve: RateCurveSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty document yields defaults")
    }
}

fn check_grid<T: PartialOrd + Copy>(name: &str, grid: &Option<Vec<T>>) -> Result<()> {
    if let Some(g) = grid {
        if g.is_empty() {
            return Err(Error::config(format!("grids.{name} is empty")));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(format!("grids.{name} must be strictly increasing")));
        }
    }
    Ok(())
}

fn check_positive(name: &str, grid: &Option<Vec<f64>>) -> Result<()> {
    match grid {
        Some(g) if g.iter().any(|v| !(*v > 0.0) || !v.is_finite()) => {
            Err(Error::config(format!("grids.{name} must hold finite positive values")))
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocklength == 0 {
            return Err(Error::config("blocklength must be positive"));
        }
        self.channel.resolve()?;
        self.mc.validate()?;
        let g = &self.grids;
        check_grid("rates", &g.rates)?;
        check_grid("theta_delay", &g.theta_delay)?;
        check_grid("theta_err", &g.theta_err)?;
        check_grid("levels", &g.levels)?;
        check_grid("blocklengths", &g.blocklengths)?;
        check_grid("error_probs", &g.error_probs)?;
        check_positive("theta_delay", &g.theta_delay)?;
        check_positive("theta_err", &g.theta_err)?;
        check_positive("error_probs", &g.error_probs)?;
        if let Some(r) = &g.rates {
            if r.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::config("grids.rates must hold finite nonnegative values"));
            }
        }
        if let Some(levels) = &g.levels {
            if levels.iter().any(|u| !(*u < 0.0)) {
                return Err(Error::config("grids.levels must be negative (u < 0)"));
            }
        }
        if let Some(p) = &g.error_probs {
            if p.iter().any(|e| !(*e < 0.5)) {
                return Err(Error::config("grids.error_probs must lie in (0, 0.5)"));
            }
        }
        if let Some(b) = &g.blocklengths {
            if b[0] == 0 {
                return Err(Error::config("grids.blocklengths must be positive"));
            }
        }
        let q = &self.queue;
        if !(q.theta_delay > 0.0) || !(q.theta_err > 0.0) || !(q.arrival_factor >= 0.0) {
            return Err(Error::config("queue exponents must be positive and arrival_factor nonnegative"));
        }
        if q.arrival_bits.is_some_and(|a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::config("queue.arrival_bits must be finite and nonnegative"));
        }
        if q.blocks < 10 || q.replications == 0 {
            return Err(Error::config("queue needs at least 10 blocks and one replication"));
        }
        let t = &self.tradeoff;
        if !(t.theta_err_max > 0.0) || t.sweep_points < 3 || !(t.theta_delay > 0.0) {
            return Err(Error::config("tradeoff needs theta_err_max > 0, theta_delay > 0 and sweep_points ≥ 3"));
        }
        let e = self.rate_curve.error_prob;
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::config("rate_curve.error_prob must lie in (0, 1)"));
        }
        if !(self.packet_size_bits > 0.0) {
            return Err(Error::config("packet_size_bits must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration serialized as JSON.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
