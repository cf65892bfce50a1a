//! Discrete-time queue driven by the finite-blocklength service process.
//!
//! Each block brings `a` bits and serves `n·R*(γ)` bits, or nothing when the
//! block fails to decode (probability `e^{−nϑ}`); undelivered bits stay queued.
//! The stationary overflow probability `P(Q > x)` should decay like
//! `e^{−θ_bit·x}` whenever `a` does not exceed the effective capacity at θ.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{gram_eigenvalues, sample_channel, substream, ChannelConfig};
use crate::error::{Error, Result};
use crate::fbc_rate::{conditional_capacity, conditional_dispersion, reliability_quantile};

pub const WARMUP_FRACTION: f64 = 0.1;
pub const THRESHOLD_QUANTILES: [f64; 4] = [0.9, 0.95, 0.99, 0.999];
/// Exceedances a threshold needs before it enters the tail fit.
pub const MIN_FIT_EVENTS: u64 = 50;
/// Minimum number of usable thresholds for a slope estimate.
pub const MIN_FIT_POINTS: usize = 3;

const FAILURE_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueTrace {
    /// Distinct thresholds in bits, increasing.
    pub thresholds: Vec<f64>,
    /// Empirical `P(Q > x)` at each threshold.
    pub overflow_probs: Vec<f64>,
    pub events: Vec<u64>,
    /// Least-squares slope of `−ln P(Q > x)` against `x`, per bit.
    pub fitted_exponent: Option<f64>,
    pub r_squared: Option<f64>,
    pub blocks: usize,
    pub arrival_rate: f64,
    pub mean_service: f64,
}

impl QueueTrace {
    pub fn log_probs(&self) -> Vec<f64> {
        self.overflow_probs.iter().map(|p| p.ln()).collect()
    }
}

/// Bits served in each of `blocks` fading blocks.
pub fn block_services(config: &ChannelConfig, theta_err: f64, n: usize, blocks: usize, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let z = reliability_quantile(theta_err, n)?;
    let eps = (-(n as f64) * theta_err).exp();
    (0..blocks as u64)
        .into_par_iter()
        .map(|i| {
            let e = gram_eigenvalues(&sample_channel(config, seed, i))?;
            let rate = conditional_capacity(config, &e) - (conditional_dispersion(config, &e) / n as f64).sqrt() * z;
            let failed = substream(seed, FAILURE_STREAM | i).random::<f64>() < eps;
            Ok(if failed { 0.0 } else { n as f64 * rate.max(0.0) })
        })
        .collect()
}

/// Queue length after each block, starting empty.
pub fn lindley(arrival: f64, services: &[f64]) -> Vec<f64> {
    let mut q = 0.0_f64;
    services
        .iter()
        .map(|s| {
            q = (q + arrival - s).max(0.0);
            q
        })
        .collect()
}

fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Runs the queue over precomputed services and summarizes its tail.
pub fn trace_from_services(arrival: f64, services: &[f64]) -> Result<QueueTrace> {
    if !(arrival >= 0.0) || !arrival.is_finite() {
        return Err(Error::domain(format!("arrival rate must be finite and nonnegative, got {arrival}")));
    }
    if services.len() < 10 {
        return Err(Error::domain("queue simulation needs at least 10 blocks"));
    }
    let queue = lindley(arrival, services);
    let warmup = (services.len() as f64 * WARMUP_FRACTION).ceil() as usize;
    let mut tail = queue[warmup..].to_vec();
    tail.sort_by(f64::total_cmp);
    let m = tail.len();

    let mut thresholds: Vec<f64> = THRESHOLD_QUANTILES
        .iter()
        .map(|q| tail[((q * (m - 1) as f64).floor() as usize).min(m - 1)])
        .collect();
    thresholds.dedup();
    let events: Vec<u64> =
        thresholds.iter().map(|x| (m - tail.partition_point(|v| v <= x)) as u64).collect();
    let overflow_probs: Vec<f64> = events.iter().map(|&e| e as f64 / m as f64).collect();

    let (fx, fy): (Vec<f64>, Vec<f64>) = thresholds
        .iter()
        .zip(&events)
        .zip(&overflow_probs)
        .filter(|((x, e), _)| **x > 0.0 && **e >= MIN_FIT_EVENTS)
        .map(|((x, _), p)| (*x, -p.ln()))
        .unzip();
    let (fitted_exponent, r_squared) = if fx.len() >= MIN_FIT_POINTS {
        let (slope, r2) = fit_line(&fx, &fy);
        (Some(slope), Some(r2))
    } else {
        (None, None)
    };
    Ok(QueueTrace {
        thresholds,
        overflow_probs,
        events,
        fitted_exponent,
        r_squared,
        blocks: services.len(),
        arrival_rate: arrival,
        mean_service: services.iter().sum::<f64>() / services.len() as f64,
    })
}

/// Simulates `blocks` fading blocks with constant arrivals of `arrival_rate`
/// bits per block.
pub fn simulate_queue(
    config: &ChannelConfig,
    arrival_rate: f64,
    theta_err: f64,
    n: usize,
    blocks: usize,
    seed: u64,
) -> Result<QueueTrace> {
    let services = block_services(config, theta_err, n, blocks, seed)?;
    trace_from_services(arrival_rate, &services)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_arrivals_keep_queue_empty() {
        let cfg = ChannelConfig::from_snr_db(1, 1, 10.0).unwrap();
        let t = simulate_queue(&cfg, 0.0, 0.02, 200, 2000, 3).unwrap();
        assert!(t.overflow_probs.iter().all(|&p| p == 0.0));
        assert!(t.thresholds.iter().all(|&x| x == 0.0));
        assert!(t.fitted_exponent.is_none());
        assert_eq!(t.blocks, 2000);
    }

    #[test]
    fn stable_deterministic_queue_stays_empty() {
        let q = lindley(3.0, &vec![5.0; 1000]);
        assert!(q.iter().all(|&v| v == 0.0));
        let t = trace_from_services(3.0, &vec![5.0; 1000]).unwrap();
        assert_eq!(t.overflow_probs, vec![0.0]);
    }

    #[test]
    fn lindley_recursion_by_hand() {
        assert_eq!(lindley(2.0, &[0.0, 1.0, 5.0, 0.0]), vec![2.0, 3.0, 0.0, 2.0]);
    }

    #[test]
    fn services_are_reproducible_and_failures_serve_nothing() {
        let cfg = ChannelConfig::from_snr_db(1, 1, 10.0).unwrap();
        let a = block_services(&cfg, 0.004, 200, 5000, 9).unwrap();
        let b = block_services(&cfg, 0.004, 200, 5000, 9).unwrap();
        assert_eq!(a, b);
        // ε = e^{-0.8} ≈ 0.45 of the blocks fail
        let zeros = a.iter().filter(|&&s| s == 0.0).count() as f64 / 5000.0;
        assert!((zeros - (-0.8f64).exp()).abs() < 0.03, "{zeros}");
    }

    #[test]
    fn overflow_probabilities_decrease() {
        let services: Vec<f64> = (0..20000).map(|i| if i % 3 == 0 { 0.0 } else { 3.0 }).collect();
        let t = trace_from_services(1.9, &services).unwrap();
        assert!(t.overflow_probs.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.thresholds.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn negative_arrival_is_rejected() {
        assert!(trace_from_services(-1.0, &[1.0; 20]).is_err());
    }
}
