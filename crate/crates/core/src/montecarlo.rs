//! Seeded, stream-partitioned Monte Carlo engine.
//!
//! Realization `i` of a run is drawn from its own counter-keyed substream of
//! `seed`, so results never depend on how the index range is split across
//! workers: per-sample values are computed in parallel, collected in index
//! order and reduced sequentially.
//!
//! Expectations that are compared across parameters (rates, exponents, SNRs)
//! should be evaluated on one [`EigenEnsemble`] so that they share common
//! random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{gram_eigenvalues, sample_channel, ChannelConfig, ChannelRealization, EigenSample};
use crate::error::{Error, Result};

/// How many realizations to draw and from which stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
    /// Pair realization `2k+1` with the negation of realization `2k`.
    #[serde(default)]
    pub antithetic: bool,
}

impl MonteCarloSpec {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        let spec = Self { samples, seed, antithetic: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn antithetic(mut self) -> Result<Self> {
        self.antithetic = true;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::config("Monte Carlo needs at least 2 samples"));
        }
        if self.antithetic && !self.samples.is_multiple_of(2) {
            return Err(Error::config("antithetic sampling needs an even sample count"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        Self { mean: value, stderr: 0.0, samples: 1, seed }
    }

    /// `sqrt(a² + b²)` of two standard errors.
    pub fn joint_stderr(&self, other: &Self) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Realization `index` of the run described by `spec`.
pub fn realization(config: &ChannelConfig, spec: &MonteCarloSpec, index: u64) -> ChannelRealization {
    if spec.antithetic {
        let base = sample_channel(config, spec.seed, index / 2);
        if index % 2 == 1 {
            base.negated()
        } else {
            base
        }
    } else {
        sample_channel(config, spec.seed, index)
    }
}

fn evaluate<T, F>(config: &ChannelConfig, spec: &MonteCarloSpec, partitions: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ChannelRealization) -> Result<T> + Sync,
{
    spec.validate()?;
    config.validate()?;
    let n = spec.samples as u64;
    let parts = partitions.clamp(1, spec.samples) as u64;
    let chunk = n.div_ceil(parts);
    let blocks: Vec<Result<Vec<T>>> = (0..parts)
        .into_par_iter()
        .map(|p| {
            let (start, end) = (p * chunk, ((p + 1) * chunk).min(n));
            (start..end)
                .map(|i| {
                    f(&realization(config, spec, i))
                        .map_err(|e| Error::Functional { index: i, source: Box::new(e) })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(spec.samples);
    for block in blocks {
        out.extend(block?);
    }
    Ok(out)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of per-sample values drawn under `spec`.
///
/// With antithetic sampling the standard error is computed over pair averages.
pub fn summarize(values: &[f64], spec: &MonteCarloSpec) -> MonteCarloEstimate {
    let (mean, stderr) = if spec.antithetic && values.len() >= 4 {
        let pairs: Vec<f64> = values.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        mean_and_stderr(&pairs)
    } else {
        mean_and_stderr(values)
    };
    MonteCarloEstimate { mean, stderr, samples: values.len(), seed: spec.seed }
}

/// Plain Monte Carlo mean of `functional` over the realizations of `spec`.
pub fn estimate<F>(functional: F, config: &ChannelConfig, spec: &MonteCarloSpec) -> Result<MonteCarloEstimate>
where
    F: Fn(&ChannelRealization) -> Result<f64> + Sync,
{
    estimate_partitioned(functional, config, spec, rayon::current_num_threads())
}

/// [`estimate`] with an explicit number of index partitions.
pub fn estimate_partitioned<F>(
    functional: F,
    config: &ChannelConfig,
    spec: &MonteCarloSpec,
    partitions: usize,
) -> Result<MonteCarloEstimate>
where
    F: Fn(&ChannelRealization) -> Result<f64> + Sync,
{
    let values = evaluate(config, spec, partitions, functional)?;
    Ok(summarize(&values, spec))
}

/// `ln((1/N)·Σ exp(ℓ_i))` by max-shifted accumulation, with a delta-method
/// standard error.
///
/// `ℓ_i = -inf` contributes zero; if every sample is `-inf` the estimate is
/// degenerate. A `+inf` sample makes the result `+inf`.
pub fn log_mean_exp(log_values: &[f64]) -> Result<(f64, f64)> {
    log_mean_exp_inner(log_values, false)
}

fn log_mean_exp_inner(log_values: &[f64], paired: bool) -> Result<(f64, f64)> {
    if log_values.is_empty() {
        return Err(Error::DegenerateEstimate("no samples".into()));
    }
    if log_values.iter().any(|l| l.is_nan()) {
        return Err(Error::NumericRange { context: "NaN log-integrand".into(), magnitude: f64::NAN });
    }
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEstimate("every log-sample is -inf".into()));
    }
    if max == f64::INFINITY {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let weights: Vec<f64> = log_values.iter().map(|l| (l - max).exp()).collect();
    let (mean, stderr) = if paired && weights.len() >= 4 {
        let pairs: Vec<f64> = weights.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        mean_and_stderr(&pairs)
    } else {
        mean_and_stderr(&weights)
    };
    Ok((max + mean.ln(), stderr / mean))
}

/// Log-domain counterpart of [`summarize`].
pub fn summarize_log(log_values: &[f64], spec: &MonteCarloSpec) -> Result<MonteCarloEstimate> {
    let (mean, stderr) = log_mean_exp_inner(log_values, spec.antithetic)?;
    Ok(MonteCarloEstimate { mean, stderr, samples: log_values.len(), seed: spec.seed })
}

/// `ln E[exp(ℓ(H))]` over the realizations of `spec`.
pub fn log_domain_estimate<F>(log_functional: F, config: &ChannelConfig, spec: &MonteCarloSpec) -> Result<MonteCarloEstimate>
where
    F: Fn(&ChannelRealization) -> Result<f64> + Sync,
{
    let values = evaluate(config, spec, rayon::current_num_threads(), log_functional)?;
    summarize_log(&values, spec)
}

/// Eigenvalue samples of `H·Hᴴ` for a fixed run, shared across every
/// functional that must see common random numbers.
///
/// The eigenvalues do not depend on power, distance or noise, so one ensemble
/// serves every SNR with the same antenna geometry.
#[derive(Debug, Clone)]
pub struct EigenEnsemble {
    samples: Vec<EigenSample>,
    spec: MonteCarloSpec,
    n_tx: usize,
    n_rx: usize,
}

impl EigenEnsemble {
    pub fn sample(config: &ChannelConfig, spec: &MonteCarloSpec) -> Result<Self> {
        let samples = evaluate(config, spec, rayon::current_num_threads(), gram_eigenvalues)?;
        Ok(Self { samples, spec: *spec, n_tx: config.n_tx, n_rx: config.n_rx })
    }

    pub fn samples(&self) -> &[EigenSample] {
        &self.samples
    }

    pub fn spec(&self) -> &MonteCarloSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether `config` has the antenna geometry this ensemble was drawn for.
    pub fn matches(&self, config: &ChannelConfig) -> bool {
        self.n_tx == config.n_tx && self.n_rx == config.n_rx
    }

    pub(crate) fn check(&self, config: &ChannelConfig) -> Result<()> {
        if self.matches(config) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "ensemble drawn for {}x{} used with {}x{} config",
                self.n_tx, self.n_rx, config.n_tx, config.n_rx
            )))
        }
    }

    pub fn map<F: Fn(&EigenSample) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        self.samples.par_iter().map(f).collect()
    }
}

/// Sample moments of `Σ_i ln λ_i` over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEigenMoments {
    /// Sample variance of `Σ ln(λ_i·SNR)`, which equals that of `Σ ln λ_i`.
    pub variance: MonteCarloEstimate,
    /// Mean of `Σ ln λ_i`.
    pub mean: MonteCarloEstimate,
    /// Samples dropped because an eigenvalue was exactly zero.
    pub excluded: usize,
}

/// Variance of `ln Π_i (λ_i·SNR)` over eigenvalue samples.
///
/// The SNR only shifts the logarithm, so it is left out of the computation
/// and the estimate is identical for every SNR under a common seed.
pub fn variance_of_log_eigen_product(config: &ChannelConfig, spec: &MonteCarloSpec) -> Result<LogEigenMoments> {
    let ensemble = EigenEnsemble::sample(config, spec)?;
    log_eigen_moments(&ensemble)
}

pub fn log_eigen_moments(ensemble: &EigenEnsemble) -> Result<LogEigenMoments> {
    let logs: Vec<f64> = ensemble
        .samples()
        .iter()
        .map(EigenSample::log_product)
        .filter(|l| l.is_finite())
        .collect();
    let excluded = ensemble.len() - logs.len();
    if logs.len() < 2 {
        return Err(Error::DegenerateEstimate("fewer than two finite log-eigenvalue products".into()));
    }
    let n = logs.len() as f64;
    let (mean, mean_se) = mean_and_stderr(&logs);
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = logs.iter().map(|l| (l - mean).powi(4)).sum::<f64>() / n;
    let var_se = ((m4 - var * var).max(0.0) / n).sqrt();
    let seed = ensemble.spec().seed;
    Ok(LogEigenMoments {
        variance: MonteCarloEstimate { mean: var, stderr: var_se, samples: logs.len(), seed },
        mean: MonteCarloEstimate { mean, stderr: mean_se, samples: logs.len(), seed },
        excluded,
    })
}
