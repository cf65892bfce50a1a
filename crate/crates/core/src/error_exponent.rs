//! Gallager-type error-rate exponent over MIMO Rayleigh fading.
//!
//! `E(ρ) = −(1/n)·ln E_H[det(I + SNR/(N_T(1+ρ))·H·Hᴴ)^(−nρ)]` and
//! `ϑ = sup_{ρ∈[0,1]} E(ρ) − ρR`. For blocklengths in the hundreds the
//! integrand spans hundreds of orders of magnitude, so every expectation is a
//! log-mean-exp over the samples of one [`EigenEnsemble`].

use serde::Serialize;

use crate::channel::{ChannelConfig, EigenSample};
use crate::error::{Error, Result};
use crate::fbc_rate::conditional_capacity;
use crate::montecarlo::{log_eigen_moments, summarize, summarize_log, EigenEnsemble, MonteCarloEstimate, MonteCarloSpec};
use crate::numeric::{bracketed_max, linspace};
use crate::units::bits_to_nats;

/// Tolerance in `ρ` of the golden-section refinement.
pub const RHO_TOLERANCE: f64 = 1e-4;
/// Default lower SNR bound (linear) for the high-SNR form.
pub const HIGH_SNR_GUARD: f64 = 100.0;
const RHO_BRACKET_POINTS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentResult {
    /// `ϑ` in nats per channel use.
    pub theta_err: f64,
    pub rho_star: f64,
    pub e0_at_rho_star: f64,
    /// Standard error of `E(ρ*)`, and hence of `ϑ` at fixed `ρ*`.
    pub stderr: f64,
}

/// High-SNR form of `E(ρ)` together with the count of samples whose
/// eigenvalue product vanished (each makes the integrand infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrE0 {
    pub value: MonteCarloEstimate,
    pub infinite_samples: usize,
}

/// Closed-form approximation of the exponent and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxExponent {
    pub theta_err: f64,
    /// Ergodic capacity used in the numerator (bits).
    pub capacity: f64,
    /// `Var[ln Π_i λ_i·SNR]`.
    pub log_variance: f64,
}

/// `exp(−n·ϑ)`, the error-probability bound implied by an exponent.
pub fn error_prob_bound(theta_err: f64, n: usize) -> f64 {
    (-(n as f64) * theta_err).exp()
}

/// Exponent computations for one channel and blocklength on a fixed ensemble.
#[derive(Debug, Clone)]
pub struct ExponentModel {
    config: ChannelConfig,
    ensemble: EigenEnsemble,
    n: usize,
}

impl ExponentModel {
    pub fn new(config: ChannelConfig, ensemble: EigenEnsemble, n: usize) -> Result<Self> {
        config.validate()?;
        ensemble.check(&config)?;
        if n == 0 {
            return Err(Error::domain("blocklength must be positive"));
        }
        Ok(Self { config, ensemble, n })
    }

    pub fn sample(config: ChannelConfig, n: usize, mc: &MonteCarloSpec) -> Result<Self> {
        let ensemble = EigenEnsemble::sample(&config, mc)?;
        Self::new(config, ensemble, n)
    }

    /// Same ensemble and blocklength, different power/distance/noise.
    pub fn with_config(&self, config: ChannelConfig) -> Result<Self> {
        Self::new(config, self.ensemble.clone(), self.n)
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    pub fn ensemble(&self) -> &EigenEnsemble {
        &self.ensemble
    }

    /// Ergodic capacity on this ensemble (bits per channel use).
    pub fn capacity(&self) -> MonteCarloEstimate {
        let values = self.ensemble.map(|e| conditional_capacity(&self.config, e));
        summarize(&values, self.ensemble.spec())
    }

    fn check_rho(rho: f64) -> Result<()> {
        if (0.0..=1.0).contains(&rho) {
            Ok(())
        } else {
            Err(Error::domain(format!("rho must lie in [0,1], got {rho}")))
        }
    }

    fn estimate_from_logs(&self, log_values: &[f64], what: &str) -> Result<MonteCarloEstimate> {
        let n = self.n as f64;
        let est = summarize_log(log_values, self.ensemble.spec())?;
        if !est.mean.is_finite() {
            let magnitude = log_values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
            return Err(Error::NumericRange { context: format!("{what}: log-mean not finite"), magnitude });
        }
        Ok(MonteCarloEstimate { mean: -est.mean / n, stderr: est.stderr / n, ..est })
    }

    /// Gallager function `E(ρ)` in nats per channel use.
    pub fn e0(&self, rho: f64) -> Result<MonteCarloEstimate> {
        Self::check_rho(rho)?;
        let spec = self.ensemble.spec();
        if rho == 0.0 {
            return Ok(MonteCarloEstimate { mean: 0.0, stderr: 0.0, samples: spec.samples, seed: spec.seed });
        }
        let scale = self.config.mode_snr_scale() / (1.0 + rho);
        let power = self.n as f64 * rho;
        let logs = self.ensemble.map(|e: &EigenSample| {
            -power * e.eigenvalues.iter().map(|l| (scale * l).ln_1p()).sum::<f64>()
        });
        self.estimate_from_logs(&logs, "E0")
    }

    /// `sup_{ρ∈[0,1]} E(ρ) − ρ·R` for `rate` in bits per channel use.
    pub fn exponent(&self, rate: f64) -> Result<ExponentResult> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::domain(format!("rate must be finite and nonnegative, got {rate}")));
        }
        let rate_nats = bits_to_nats(rate);
        let grid = linspace(0.0, 1.0, RHO_BRACKET_POINTS);
        let best = bracketed_max(|rho| Ok(self.e0(rho)?.mean - rho * rate_nats), &grid, RHO_TOLERANCE)?;
        let e0 = self.e0(best.x)?;
        Ok(ExponentResult { theta_err: best.value.max(0.0), rho_star: best.x, e0_at_rho_star: e0.mean, stderr: e0.stderr })
    }

    /// High-SNR reduction of `E(ρ)`:
    /// `−ρ·m·ln(1+ρ) − (1/n)·ln E[(Π_i λ_i·SNR/N_T)^(−nρ)]`, `m = min(N_T, N_R)`.
    pub fn high_snr_e0(&self, rho: f64) -> Result<HighSnrE0> {
        self.high_snr_e0_guarded(rho, HIGH_SNR_GUARD)
    }

    pub fn high_snr_e0_guarded(&self, rho: f64, min_snr: f64) -> Result<HighSnrE0> {
        Self::check_rho(rho)?;
        let snr = self.config.average_snr();
        if snr < min_snr {
            return Err(Error::domain(format!("high-SNR form needs SNR >= {min_snr}, got {snr}")));
        }
        let spec = self.ensemble.spec();
        if rho == 0.0 {
            let value = MonteCarloEstimate { mean: 0.0, stderr: 0.0, samples: spec.samples, seed: spec.seed };
            return Ok(HighSnrE0 { value, infinite_samples: 0 });
        }
        let scale = self.config.mode_snr_scale();
        let power = self.n as f64 * rho;
        let logs = self.ensemble.map(|e| -power * e.eigenvalues.iter().map(|l| (scale * l).ln()).sum::<f64>());
        let infinite_samples = logs.iter().filter(|l| **l == f64::INFINITY).count();
        let penalty = rho * self.config.modes() as f64 * rho.ln_1p();
        if infinite_samples > 0 {
            let value = MonteCarloEstimate { mean: f64::NEG_INFINITY, stderr: f64::INFINITY, samples: spec.samples, seed: spec.seed };
            return Ok(HighSnrE0 { value, infinite_samples });
        }
        let est = self.estimate_from_logs(&logs, "high-SNR E0")?;
        Ok(HighSnrE0 { value: MonteCarloEstimate { mean: est.mean - penalty, ..est }, infinite_samples })
    }

    /// Closed-form approximation
    /// `(C − R)² / (2·(2N_R + n·Var[ln Π λ_i·SNR]))`, with `C − R` in nats.
    pub fn approx_exponent(&self, rate: f64) -> Result<ApproxExponent> {
        let capacity = self.capacity().mean;
        if !(rate <= capacity) || rate < 0.0 {
            return Err(Error::domain(format!("rate {rate} must lie in [0, capacity = {capacity}]")));
        }
        let log_variance = log_eigen_moments(&self.ensemble)?.variance.mean;
        let gap = bits_to_nats(capacity - rate);
        let denom = 2.0 * (2.0 * self.config.n_rx as f64 + self.n as f64 * log_variance);
        Ok(ApproxExponent { theta_err: gap * gap / denom, capacity, log_variance })
    }
}

pub fn gallager_e0(config: &ChannelConfig, rho: f64, n: usize, mc: &MonteCarloSpec) -> Result<MonteCarloEstimate> {
    ExponentModel::sample(*config, n, mc)?.e0(rho)
}

pub fn error_exponent(config: &ChannelConfig, rate: f64, n: usize, mc: &MonteCarloSpec) -> Result<ExponentResult> {
    ExponentModel::sample(*config, n, mc)?.exponent(rate)
}

pub fn high_snr_e0(config: &ChannelConfig, rho: f64, n: usize, mc: &MonteCarloSpec) -> Result<HighSnrE0> {
    ExponentModel::sample(*config, n, mc)?.high_snr_e0(rho)
}

pub fn approx_error_exponent(config: &ChannelConfig, rate: f64, n: usize, mc: &MonteCarloSpec) -> Result<ApproxExponent> {
    ExponentModel::sample(*config, n, mc)?.approx_exponent(rate)
}
