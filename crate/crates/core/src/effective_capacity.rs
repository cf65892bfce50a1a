//! Log-moment generating function of the finite-blocklength service process
//! and the ε-effective capacity.
//!
//! Per fading state the block delivers `R*(γ)` with probability `1 − ε` and
//! nothing otherwise, where `ε = e^{−nϑ}` and `R*(γ)` is the quantile rate
//! `C(γ) − sqrt(V(γ)/n)·Q^-1(ε)` (clipped at zero). Then
//!
//! `Λ(θ,ϑ) = ln E[ε + (1−ε)·e^{−nθR*}]` and `EC = −Λ/(nθ)`,
//!
//! with `R*` converted to nats inside the exponential and `EC` reported in
//! bits per channel use.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::fbc_rate::FadingStates;
use crate::montecarlo::{summarize, summarize_log, EigenEnsemble, MonteCarloEstimate, MonteCarloSpec};
use crate::numeric::{argmax, bracketed_max, log_add_exp, logspace};
use crate::units::{bits_to_nats, nats_to_bits};

/// Default upper end of reliability-exponent searches.
pub const DEFAULT_THETA_ERR_MAX: f64 = 1.0;
/// Points in the bracketing sweep of [`ServiceModel::optimal_reliability_exponent`].
pub const DEFAULT_SWEEP_POINTS: usize = 41;

/// A (delay exponent θ, error-rate exponent ϑ) operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QosPair {
    pub theta_delay: f64,
    pub theta_err: f64,
}

impl QosPair {
    pub fn new(theta_delay: f64, theta_err: f64) -> Result<Self> {
        if !(theta_delay > 0.0 && theta_delay.is_finite()) {
            return Err(Error::domain(format!("delay exponent must be positive, got {theta_delay}")));
        }
        if !(theta_err > 0.0 && theta_err.is_finite()) {
            return Err(Error::domain(format!("error-rate exponent must be positive, got {theta_err}")));
        }
        Ok(Self { theta_delay, theta_err })
    }

    /// `e^{−nϑ} < 1/2`, the domain where the quantile rate is defined.
    pub fn is_admissible(&self, n: usize) -> bool {
        n as f64 * self.theta_err > LN_2
    }

    pub fn error_prob(&self, n: usize) -> f64 {
        (-(n as f64) * self.theta_err).exp()
    }
}

/// Smallest admissible reliability exponent at blocklength `n`, nudged inside
/// the open domain.
pub fn min_theta_err(n: usize) -> f64 {
    LN_2 / n as f64 * (1.0 + 1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcSurfacePoint {
    pub qos: QosPair,
    pub blocklength: usize,
    /// ε-effective capacity in bits per channel use.
    pub ec: f64,
    pub ec_stderr: f64,
    /// `Λ(θ,ϑ)` in nats.
    pub lambda: f64,
    pub lambda_stderr: f64,
}

/// Outcome of maximizing EC over ϑ at fixed θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityOptimum {
    pub theta_delay: f64,
    pub theta_err: f64,
    pub ec: f64,
    pub ec_stderr: f64,
    /// Set when the sweep spread is below three standard errors, i.e. the
    /// optimum is not statistically resolved.
    pub flat: bool,
    /// The bracketing sweep, in increasing ϑ.
    pub sweep: Vec<EcSurfacePoint>,
}

/// Service process of one channel at one blocklength, on fixed fading states.
#[derive(Debug, Clone)]
pub struct ServiceModel {
    states: FadingStates,
    n: usize,
}

impl ServiceModel {
    pub fn new(states: FadingStates, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("blocklength must be positive"));
        }
        Ok(Self { states, n })
    }

    pub fn sample(config: &ChannelConfig, n: usize, mc: &MonteCarloSpec) -> Result<Self> {
        Self::new(FadingStates::sample(config, mc)?, n)
    }

    pub fn from_ensemble(config: &ChannelConfig, ensemble: &EigenEnsemble, n: usize) -> Result<Self> {
        Self::new(FadingStates::from_ensemble(config, ensemble)?, n)
    }

    pub fn states(&self) -> &FadingStates {
        &self.states
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    fn check(&self, qos: &QosPair) -> Result<()> {
        if qos.is_admissible(self.n) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "exp(-n·theta_err) = {:e} is not below 1/2 (n = {})",
                qos.error_prob(self.n),
                self.n
            )))
        }
    }

    /// Per-state `ln(ε + (1−ε)·e^{−nθR*})`.
    fn log_integrand(&self, qos: &QosPair) -> Result<Vec<f64>> {
        self.check(qos)?;
        let rates = self.states.service_rates(qos.theta_err, self.n)?;
        let n = self.n as f64;
        let log_eps = -n * qos.theta_err;
        let log_keep = (-log_eps.exp()).ln_1p();
        let slope = n * qos.theta_delay;
        Ok(rates
            .iter()
            // the integrand never exceeds one; clamp away rounding above it
            .map(|r| log_add_exp(log_eps, log_keep - slope * bits_to_nats(*r)).min(0.0))
            .collect())
    }

    /// `Λ(θ,ϑ)` with a delta-method standard error.
    pub fn log_mgf(&self, qos: &QosPair) -> Result<MonteCarloEstimate> {
        let logs = self.log_integrand(qos)?;
        let est = summarize_log(&logs, &self.states.spec())?;
        if !est.mean.is_finite() {
            return Err(Error::NumericRange { context: "log-MGF not finite".into(), magnitude: est.mean.abs() });
        }
        Ok(est)
    }

    pub fn effective_capacity(&self, qos: &QosPair) -> Result<EcSurfacePoint> {
        let lambda = self.log_mgf(qos)?;
        let scale = self.n as f64 * qos.theta_delay;
        Ok(EcSurfacePoint {
            qos: *qos,
            blocklength: self.n,
            ec: nats_to_bits(-lambda.mean / scale),
            ec_stderr: nats_to_bits(lambda.stderr / scale),
            lambda: lambda.mean,
            lambda_stderr: lambda.stderr,
        })
    }

    /// Mean per-state quantile rate `E[R*]` in bits.
    pub fn mean_service_rate(&self, theta_err: f64) -> Result<MonteCarloEstimate> {
        let rates = self.states.service_rates(theta_err, self.n)?;
        Ok(summarize(&rates, &self.states.spec()))
    }

    /// EC at each `theta_err` of `grid` for a fixed delay exponent.
    pub fn ec_sweep(&self, theta_delay: f64, grid: &[f64]) -> Result<Vec<EcSurfacePoint>> {
        grid.iter()
            .map(|&t| self.effective_capacity(&QosPair::new(theta_delay, t)?))
            .collect()
    }

    /// Maximizes EC over ϑ in `[min_theta_err(n), theta_err_max]`.
    ///
    /// A logarithmic sweep of `sweep_points` brackets the peak; golden-section
    /// search refines it between the neighbours of the best sweep point.
    pub fn optimal_reliability_exponent(
        &self,
        theta_delay: f64,
        theta_err_max: f64,
        sweep_points: usize,
    ) -> Result<ReliabilityOptimum> {
        let lo = min_theta_err(self.n);
        if !(theta_err_max > lo) {
            return Err(Error::domain(format!("theta_err_max {theta_err_max} below the admissible floor {lo}")));
        }
        let grid = logspace(lo, theta_err_max, sweep_points.max(3));
        let sweep = self.ec_sweep(theta_delay, &grid)?;
        let ecs: Vec<f64> = sweep.iter().map(|p| p.ec).collect();
        let best = bracketed_max(
            |t| Ok(self.effective_capacity(&QosPair::new(theta_delay, t)?)?.ec),
            &grid,
            1e-9,
        )?;
        let at_best = self.effective_capacity(&QosPair::new(theta_delay, best.x)?)?;
        let lo_idx = ecs.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        let hi_idx = argmax(&ecs).unwrap_or(0);
        let spread = ecs[hi_idx] - ecs[lo_idx];
        let flat = spread < 3.0 * sweep[hi_idx].ec_stderr.hypot(sweep[lo_idx].ec_stderr);
        Ok(ReliabilityOptimum {
            theta_delay,
            theta_err: best.x,
            ec: at_best.ec,
            ec_stderr: at_best.ec_stderr,
            flat,
            sweep,
        })
    }
}

pub fn log_mgf(config: &ChannelConfig, qos: &QosPair, n: usize, mc: &MonteCarloSpec) -> Result<MonteCarloEstimate> {
    ServiceModel::sample(config, n, mc)?.log_mgf(qos)
}

pub fn epsilon_effective_capacity(config: &ChannelConfig, qos: &QosPair, n: usize, mc: &MonteCarloSpec) -> Result<EcSurfacePoint> {
    ServiceModel::sample(config, n, mc)?.effective_capacity(qos)
}

pub fn optimal_reliability_exponent(
    config: &ChannelConfig,
    theta_delay: f64,
    n: usize,
    mc: &MonteCarloSpec,
) -> Result<ReliabilityOptimum> {
    ServiceModel::sample(config, n, mc)?.optimal_reliability_exponent(theta_delay, DEFAULT_THETA_ERR_MAX, DEFAULT_SWEEP_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn siso(samples: usize) -> ServiceModel {
        let c = ChannelConfig::from_snr_db(1, 1, 10.0).unwrap();
        ServiceModel::sample(&c, 200, &MonteCarloSpec::new(samples, 31).unwrap()).unwrap()
    }

    #[test]
    fn qos_pair_validation() {
        assert!(QosPair::new(0.0, 0.1).is_err());
        assert!(QosPair::new(0.1, -0.1).is_err());
        assert!(QosPair::new(f64::INFINITY, 0.1).is_err());
        let q = QosPair::new(0.1, 0.003).unwrap();
        assert!(!q.is_admissible(200));
        assert!(q.is_admissible(300));
    }

    #[test]
    fn inadmissible_pairs_are_rejected() {
        let m = siso(100);
        let q = QosPair::new(0.01, 0.001).unwrap();
        assert!(matches!(m.log_mgf(&q), Err(Error::Domain(_))));
    }

    #[test]
    fn deterministic_stub_log_mgf() {
        let (r0, n) = (1.5, 200);
        let m = ServiceModel::new(FadingStates::deterministic(r0, 0.0).unwrap(), n).unwrap();
        let q = QosPair::new(0.004, 0.01).unwrap();
        let eps = q.error_prob(n);
        let expected = (eps + (1.0 - eps) * (-(n as f64) * q.theta_delay * r0 * LN_2).exp()).ln();
        assert!((m.log_mgf(&q).unwrap().mean - expected).abs() < 1e-14);
    }

    #[test]
    fn small_theta_drives_lambda_to_zero() {
        let m = siso(2_000);
        let l = m.log_mgf(&QosPair::new(1e-12, 0.02).unwrap()).unwrap().mean;
        assert!(l.abs() < 1e-8 && l <= 0.0);
    }

    #[test]
    fn lambda_is_never_positive() {
        let m = siso(2_000);
        for t in [1e-4, 1e-2, 1.0, 10.0] {
            for v in [0.004, 0.02, 0.5, 3.0] {
                assert!(m.log_mgf(&QosPair::new(t, v).unwrap()).unwrap().mean <= 0.0);
            }
        }
    }

    #[test]
    fn ec_and_log_mgf_are_consistent() {
        let m = siso(5_000);
        let p = m.effective_capacity(&QosPair::new(0.01, 0.02).unwrap()).unwrap();
        let residual = bits_to_nats(p.ec) * 200.0 * 0.01 + p.lambda;
        assert!(residual.abs() < 1e-12);
    }

    #[test]
    fn ec_is_capped_by_best_state() {
        let m = siso(5_000);
        let q = QosPair::new(0.01, 0.02).unwrap();
        let rates = m.states().service_rates(q.theta_err, 200).unwrap();
        let max = rates.iter().copied().fold(0.0, f64::max);
        assert!(m.effective_capacity(&q).unwrap().ec <= max);
    }

    #[test]
    fn stub_without_errors_delivers_full_rate() {
        let m = ServiceModel::new(FadingStates::deterministic(2.0, 0.0).unwrap(), 200).unwrap();
        for theta in [1e-4, 0.01, 0.3] {
            let p = m.effective_capacity(&QosPair::new(theta, 50.0).unwrap()).unwrap();
            assert!((p.ec - 2.0).abs() <= 4.0 * f64::EPSILON * 2.0, "{}", p.ec);
        }
    }

    #[test]
    fn stub_has_interior_optimum() {
        let m = ServiceModel::new(FadingStates::deterministic(3.0, 2.0).unwrap(), 200).unwrap();
        let opt = m.optimal_reliability_exponent(0.01, 1.0, 41).unwrap();
        let lo = min_theta_err(200);
        assert!(opt.theta_err > lo && opt.theta_err < 1.0);
        let edge = m.effective_capacity(&QosPair::new(0.01, lo).unwrap()).unwrap().ec;
        assert!(opt.ec > edge);
        assert!(!opt.flat);
    }
}
