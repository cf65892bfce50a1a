//! Capacity, dispersion and the normal approximation of the maximum
//! achievable coding rate over quasi-static MIMO fading.
//!
//! Rates are in bits per channel use and dispersions in bits² per channel use.

use std::f64::consts::{LN_2, LOG2_E, SQRT_2};

use serde::Serialize;
use libm::erfc;
use statrs::function::gamma::digamma;

use crate::channel::{eigen_snrs, ChannelConfig, EigenSample};
use crate::error::{Error, Result};
use crate::montecarlo::{summarize, EigenEnsemble, MonteCarloEstimate, MonteCarloSpec};
use crate::numeric::bisect;

/// Smallest blocklength for which the normal approximation is used.
pub const MIN_BLOCKLENGTH: usize = 50;
/// Absolute rate tolerance of the bisection solver (bits per channel use).
pub const RATE_TOLERANCE: f64 = 1e-6;
const RATE_MAX_ITER: usize = 100;

// ---------------------------------------------------------------------------
// Gaussian tail

/// Standard Gaussian upper tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln Q(x)`, accurate far beyond the point where `Q(x)` underflows.
pub fn log_q_function(x: f64) -> f64 {
    if x < 30.0 {
        return q_function(x).ln();
    }
    // asymptotic Mills-ratio series; at x >= 30 the truncation error is < 1e-16
    let inv = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..=7 {
        term *= -((2 * k - 1) as f64) * inv;
        series += term;
    }
    -0.5 * x * x - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

fn log_phi(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("Q^-1 requires p in (0,1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        // 1 - p is exact for p in [0.5, 1]
        return Ok(-upper_tail_inverse((1.0 - p).ln()));
    }
    Ok(upper_tail_inverse(p.ln()))
}

/// `Q^-1(exp(log_p))`, usable for tail probabilities far below `f64::MIN_POSITIVE`.
pub fn q_inverse_log(log_p: f64) -> Result<f64> {
    if !(log_p < 0.0) || log_p == f64::NEG_INFINITY {
        return Err(Error::domain(format!("Q^-1 requires ln p in (-inf, 0), got {log_p}")));
    }
    if log_p > -LN_2 {
        let complement = -log_p.exp_m1();
        return Ok(-upper_tail_inverse(complement.ln()));
    }
    if log_p == -LN_2 {
        return Ok(0.0);
    }
    Ok(upper_tail_inverse(log_p))
}

/// Solves `ln Q(x) = log_p` for `log_p <= ln(1/2)`, i.e. `x >= 0`.
fn upper_tail_inverse(log_p: f64) -> f64 {
    let t = -2.0 * log_p;
    // ln Q is concave and decreasing, so Newton iterates land right of the root
    // after the first step and then converge monotonically.
    let mut x = (t - (2.0 * std::f64::consts::PI * t).ln()).max(0.0).sqrt();
    for _ in 0..100 {
        let lq = log_q_function(x);
        let g = lq - log_p;
        let slope = -(log_phi(x) - lq).exp();
        let step = g / slope;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Capacity and dispersion

/// `Σ_i log2(1 + γ_i)` = `log2 det(I + (SNR/N_T)·H·Hᴴ)` for one realization.
pub fn conditional_capacity(config: &ChannelConfig, e: &EigenSample) -> f64 {
    eigen_snrs(config, e).iter().map(|g| g.ln_1p()).sum::<f64>() * LOG2_E
}

/// Parallel-Gaussian-subchannel dispersion `Σ_i (1 − (1+γ_i)^−2)·(log2 e)²`.
pub fn conditional_dispersion(config: &ChannelConfig, e: &EigenSample) -> f64 {
    eigen_snrs(config, e)
        .iter()
        .map(|g| 1.0 - (1.0 + g).powi(-2))
        .sum::<f64>()
        * LOG2_E
        * LOG2_E
}

/// Monte Carlo ergodic capacity (bits per channel use).
pub fn ergodic_capacity(config: &ChannelConfig, mc: &MonteCarloSpec) -> Result<MonteCarloEstimate> {
    if mc.samples < 100 {
        return Err(Error::config("ergodic capacity needs at least 100 samples"));
    }
    let ensemble = EigenEnsemble::sample(config, mc)?;
    ergodic_capacity_on(config, &ensemble)
}

pub fn ergodic_capacity_on(config: &ChannelConfig, ensemble: &EigenEnsemble) -> Result<MonteCarloEstimate> {
    ensemble.check(config)?;
    let values = ensemble.map(|e| conditional_capacity(config, e));
    Ok(summarize(&values, ensemble.spec()))
}

/// `E[log2 χ²_{2i}] = (ψ(i) + ln 2)/ln 2`.
pub fn expected_log2_chi_square(i: usize) -> f64 {
    (digamma(i as f64) + LN_2) * LOG2_E
}

/// High-SNR asymptote of the ergodic capacity.
///
/// `min(N_T,N_R)·log2(SNR/N_T) + Σ_{i=|N_T−N_R|+1}^{max} E[log2(χ²_{2i}/2)]`.
/// Unit-variance complex entries make `|h|²` half a `χ²_2` variate, which is
/// where the `/2` (one bit per mode) comes from.
pub fn high_snr_capacity(config: &ChannelConfig) -> Result<f64> {
    let snr = config.average_snr();
    if !(snr > 0.0) {
        return Err(Error::domain("high-SNR capacity needs a positive SNR"));
    }
    let (nt, nr) = (config.n_tx, config.n_rx);
    let modes = nt.min(nr);
    let chi: f64 = (nt.abs_diff(nr) + 1..=nt.max(nr))
        .map(|i| expected_log2_chi_square(i) - 1.0)
        .sum();
    Ok(modes as f64 * (snr / nt as f64).log2() + chi)
}

// ---------------------------------------------------------------------------
// Per-realization service states

/// Conditional capacity and dispersion for each fading state, equally weighted.
///
/// Built either from a Monte Carlo eigen ensemble or as a single deterministic
/// state. Every expectation over the fading distribution in this crate runs over
/// one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingStates {
    capacity: Vec<f64>,
    dispersion: Vec<f64>,
    seed: u64,
    antithetic: bool,
}

impl FadingStates {
    pub fn from_ensemble(config: &ChannelConfig, ensemble: &EigenEnsemble) -> Result<Self> {
        ensemble.check(config)?;
        Ok(Self {
            capacity: ensemble.map(|e| conditional_capacity(config, e)),
            dispersion: ensemble.map(|e| conditional_dispersion(config, e)),
            seed: ensemble.spec().seed,
            antithetic: ensemble.spec().antithetic,
        })
    }

    pub fn sample(config: &ChannelConfig, mc: &MonteCarloSpec) -> Result<Self> {
        Self::from_ensemble(config, &EigenEnsemble::sample(config, mc)?)
    }

    /// A channel with one fixed state.
    pub fn deterministic(capacity: f64, dispersion: f64) -> Result<Self> {
        Self::from_parts(vec![capacity], vec![dispersion])
    }

    /// Equally weighted explicit states.
    pub fn from_parts(capacity: Vec<f64>, dispersion: Vec<f64>) -> Result<Self> {
        if capacity.is_empty() || capacity.len() != dispersion.len() {
            return Err(Error::domain("need matching, nonempty capacity and dispersion lists"));
        }
        if capacity.iter().chain(&dispersion).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("capacity and dispersion must be finite and nonnegative"));
        }
        Ok(Self { capacity, dispersion, seed: 0, antithetic: false })
    }

    pub fn len(&self) -> usize {
        self.capacity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacity.is_empty()
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.dispersion
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn spec(&self) -> MonteCarloSpec {
        MonteCarloSpec { samples: self.len(), seed: self.seed, antithetic: self.antithetic && self.len().is_multiple_of(2) }
    }

    /// Mean capacity with standard error.
    pub fn ergodic_capacity(&self) -> MonteCarloEstimate {
        summarize(&self.capacity, &self.spec())
    }

    /// Standard deviation of the conditional capacity across states.
    pub fn capacity_std(&self) -> f64 {
        let n = self.len() as f64;
        if self.len() < 2 {
            return 0.0;
        }
        let m = self.capacity.iter().sum::<f64>() / n;
        (self.capacity.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// Per-state quantile rate at reliability exponent `theta_err`, clipped at
    /// zero (a state that cannot support any rate serves nothing).
    pub fn service_rates(&self, theta_err: f64, n: usize) -> Result<Vec<f64>> {
        let z = reliability_quantile(theta_err, n)?;
        let root_n = (n as f64).sqrt();
        Ok(self
            .capacity
            .iter()
            .zip(&self.dispersion)
            .map(|(c, v)| (c - v.sqrt() / root_n * z).max(0.0))
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Normal approximation

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub blocklength: usize,
    pub error_prob: f64,
    /// `R*` in bits per channel use.
    pub rate: f64,
    /// `E[Q((C−R)/sqrt(V/n))] − ε` at the returned rate.
    pub residual: f64,
    /// Standard error of the averaged error probability.
    pub residual_stderr: f64,
}

fn state_error_prob(c: f64, v: f64, rate: f64, root_n: f64) -> f64 {
    if v > 0.0 {
        q_function((c - rate) * root_n / v.sqrt())
    } else if c > rate {
        0.0
    } else if c < rate {
        1.0
    } else {
        0.5
    }
}

/// Fading-averaged block error probability at a fixed rate, with standard error.
pub fn average_error_prob(states: &FadingStates, rate: f64, n: usize) -> MonteCarloEstimate {
    let root_n = (n as f64).sqrt();
    let probs: Vec<f64> = states
        .capacity
        .iter()
        .zip(&states.dispersion)
        .map(|(&c, &v)| state_error_prob(c, v, rate, root_n))
        .collect();
    summarize(&probs, &states.spec())
}

/// Largest rate whose fading-averaged normal-approximation error probability
/// equals `eps`.
pub fn solve_normal_approx_rate(config: &ChannelConfig, n: usize, eps: f64, mc: &MonteCarloSpec) -> Result<RatePoint> {
    solve_rate_on(&FadingStates::sample(config, mc)?, n, eps)
}

/// [`solve_normal_approx_rate`] over precomputed states (common random numbers).
pub fn solve_rate_on(states: &FadingStates, n: usize, eps: f64) -> Result<RatePoint> {
    if n < MIN_BLOCKLENGTH {
        return Err(Error::domain(format!("blocklength {n} below the normal-approximation floor {MIN_BLOCKLENGTH}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("error probability must lie in (0,1), got {eps}")));
    }
    let finish = |rate: f64| {
        let p = average_error_prob(states, rate, n);
        RatePoint { blocklength: n, error_prob: eps, rate, residual: p.mean - eps, residual_stderr: p.stderr }
    };

    if states.len() == 1 {
        let (c, v) = (states.capacity[0], states.dispersion[0]);
        let rate = if v > 0.0 { c - (v / n as f64).sqrt() * q_inverse(eps)? } else { c };
        if rate < 0.0 {
            return Err(Error::InfeasibleTarget(format!("eps = {eps} needs a negative rate ({rate})")));
        }
        return Ok(finish(rate));
    }

    let upper = states.ergodic_capacity().mean + 10.0 * states.capacity_std();
    let residual = |r: f64| Ok(average_error_prob(states, r, n).mean - eps);
    let at_zero = residual(0.0)?;
    if at_zero > 0.0 {
        return Err(Error::InfeasibleTarget(format!(
            "error probability at zero rate ({:e}) already exceeds eps = {eps}",
            at_zero + eps
        )));
    }
    if at_zero == 0.0 || upper <= 0.0 {
        return Ok(finish(0.0));
    }
    if residual(upper)? < 0.0 {
        return Err(Error::InfeasibleTarget(format!("eps = {eps} not reached below rate {upper}")));
    }
    let accept = |r: f64, value: f64| value.abs() <= 1e-6f64.max(0.1 * average_error_prob(states, r, n).stderr);
    let root = bisect(residual, 0.0, upper, RATE_TOLERANCE, RATE_MAX_ITER, accept)?;
    Ok(finish(root.x))
}

// ---------------------------------------------------------------------------
// Rate-reliability function

/// `Q^-1(e^{−nϑ})`; requires `e^{−nϑ} < 1/2`.
pub fn reliability_quantile(theta_err: f64, n: usize) -> Result<f64> {
    if !(theta_err > 0.0) || !theta_err.is_finite() || n == 0 {
        return Err(Error::domain(format!("reliability exponent must be positive and finite, got {theta_err}")));
    }
    let log_eps = -(n as f64) * theta_err;
    if log_eps >= -LN_2 {
        return Err(Error::domain(format!(
            "exp(-n·theta_err) = {:e} is not below 1/2",
            log_eps.exp()
        )));
    }
    q_inverse_log(log_eps)
}

/// Rate achieving error probability `e^{−nϑ}` on a channel with the given
/// capacity (bits) and dispersion (bits²): `C − sqrt(V/n)·Q^-1(e^{−nϑ})`.
pub fn rate_from_reliability(capacity: f64, dispersion: f64, theta_err: f64, n: usize) -> Result<f64> {
    if !(dispersion >= 0.0) {
        return Err(Error::domain("dispersion must be nonnegative"));
    }
    let z = reliability_quantile(theta_err, n)?;
    Ok(capacity - (dispersion / n as f64).sqrt() * z)
}

/// Large-`nϑ` approximation `C − sqrt(2Vϑ)` (`ϑ` in nats, `V` in bits²).
pub fn rate_from_reliability_asymptotic(capacity: f64, dispersion: f64, theta_err: f64) -> f64 {
    capacity - (2.0 * dispersion * theta_err).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_function_reference_values() {
        // reference values from 40-digit arithmetic
        let refs = [
            (-2.0, 0.977_249_868_051_820_8),
            (0.5, 0.308_537_538_725_986_9),
            (1.0, 0.158_655_253_931_457_05),
            (3.0, 0.001_349_898_031_630_094_5),
            (6.0, 9.865_876_450_376_98e-10),
            (10.0, 7.619_853_024_160_526e-24),
        ];
        for (x, q) in refs {
            assert!(((q_function(x) - q) / q).abs() < 1e-12, "Q({x})");
        }
        assert_eq!(q_function(0.0), 0.5);
        assert!(q_function(8.0) < 1e-15);
    }

    #[test]
    fn log_q_deep_tail() {
        let refs = [
            (10.0, -53.231_285_150_512_47),
            (20.0, -203.917_155_371_097_26),
            (35.0, -616.975_101_261_922_5),
            (40.0, -804.608_442_013_753_8),
        ];
        for (x, lq) in refs {
            assert!(((log_q_function(x) - lq) / lq).abs() < 1e-13, "ln Q({x}) = {}", log_q_function(x));
        }
    }

    #[test]
    fn q_inverse_examples() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        assert!((q_inverse(q_function(1.5)).unwrap() - 1.5).abs() < 1e-9);
        assert!((q_inverse((-50f64).exp()).unwrap() - 9.674_825_283_612_357).abs() < 1e-9);
        assert!((q_inverse((-50f64).exp()).unwrap() - 10.0).abs() < 1.0);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!(q_inverse(f64::NAN).is_err());
    }

    #[test]
    fn q_inverse_matches_bisection_oracle() {
        // oracle: plain bisection on the decreasing Q
        let target = 0.975;
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle + 1.959964).abs() < 1e-5);
        assert!((q_inverse(target).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn q_inverse_log_beyond_underflow() {
        let x = q_inverse_log(-1000.0).unwrap();
        assert!((log_q_function(x) + 1000.0).abs() < 1e-9);
        assert!(q_inverse_log(0.0).is_err());
        assert!((q_inverse_log((0.975f64).ln()).unwrap() + 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn capacity_and_dispersion_examples() {
        let c = ChannelConfig::new(1, 1, 0.1, 1.0, 2.0, 0.1).unwrap(); // SNR = 1
        let one = EigenSample::new(vec![1.0]).unwrap();
        assert!((conditional_capacity(&c, &one) - 1.0).abs() < 1e-15);
        assert!((conditional_dispersion(&c, &one) - 0.75 * LOG2_E * LOG2_E).abs() < 1e-15);
        assert!((conditional_dispersion(&c, &one) - 1.5611).abs() < 1e-4);
        let zero = EigenSample::new(vec![0.0]).unwrap();
        assert_eq!(conditional_capacity(&c, &zero), 0.0);
        assert_eq!(conditional_dispersion(&c, &zero), 0.0);
        let huge = EigenSample::new(vec![1e12]).unwrap();
        assert!((conditional_dispersion(&c, &huge) - 2.0814).abs() < 1e-4);
    }

    #[test]
    fn chi_square_term() {
        assert!((expected_log2_chi_square(1) - 0.167_253_822_723_132_85).abs() < 1e-12);
    }

    #[test]
    fn high_snr_capacity_scaling() {
        let a = ChannelConfig::from_snr_db(2, 2, 30.0).unwrap();
        let b = ChannelConfig { power: a.power * 4.0, ..a };
        let diff = high_snr_capacity(&b).unwrap() - high_snr_capacity(&a).unwrap();
        assert!((diff - 4.0).abs() < 1e-12);
        let zero = ChannelConfig { power: 0.0, ..a };
        assert!(high_snr_capacity(&zero).is_err());
    }

    #[test]
    fn deterministic_state_at_half_is_capacity() {
        let s = FadingStates::deterministic(2.5, 1.3).unwrap();
        let p = solve_rate_on(&s, 200, 0.5).unwrap();
        assert_eq!(p.rate, 2.5);
        assert_eq!(p.residual, 0.0);
    }

    #[test]
    fn large_blocklength_approaches_capacity() {
        let s = FadingStates::deterministic(3.0, 2.0).unwrap();
        let p = solve_rate_on(&s, 1_000_000, 1e-3).unwrap();
        assert!((p.rate - 3.0).abs() / 3.0 < 0.005);
    }

    #[test]
    fn solver_preconditions() {
        let s = FadingStates::deterministic(3.0, 2.0).unwrap();
        assert!(matches!(solve_rate_on(&s, 10, 0.1), Err(Error::Domain(_))));
        assert!(matches!(solve_rate_on(&s, 100, 0.0), Err(Error::Domain(_))));
        assert!(matches!(solve_rate_on(&s, 100, 1.0), Err(Error::Domain(_))));
        let weak = FadingStates::deterministic(0.01, 2.0).unwrap();
        assert!(matches!(solve_rate_on(&weak, 100, 1e-6), Err(Error::InfeasibleTarget(_))));
    }

    #[test]
    fn zero_snr_capacity_is_exactly_zero() {
        let c = ChannelConfig::new(2, 2, 0.0, 1.0, 2.0, 0.1).unwrap();
        let est = ergodic_capacity(&c, &MonteCarloSpec::new(200, 1).unwrap()).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
        assert!(ergodic_capacity(&c, &MonteCarloSpec::new(99, 1).unwrap()).is_err());
    }

    #[test]
    fn rate_reliability_edges() {
        // V = 0: rate equals capacity everywhere admissible
        for t in [0.01, 0.1, 1.0, 10.0] {
            assert_eq!(rate_from_reliability(4.0, 0.0, t, 200).unwrap(), 4.0);
        }
        // approaching e^{-nϑ} = 1/2 from below
        let t = LN_2 / 200.0 * (1.0 + 1e-12);
        assert!((rate_from_reliability(4.0, 2.0, t, 200).unwrap() - 4.0).abs() < 1e-5);
        assert!(matches!(rate_from_reliability(4.0, 2.0, LN_2 / 200.0, 200), Err(Error::Domain(_))));
        assert!(matches!(rate_from_reliability(4.0, 2.0, 0.001, 200), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_reliability_round_trip() {
        let (c, v, n) = (4.0, 2.0, 200);
        for t in [0.005, 0.01, 0.03, 0.06, 0.1] {
            let r = rate_from_reliability(c, v, t, n).unwrap();
            let eps = q_function((c - r) / (v / n as f64).sqrt());
            assert!((eps - (-(n as f64) * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn service_rates_are_clipped() {
        let s = FadingStates::from_parts(vec![0.0, 3.0], vec![0.5, 2.0]).unwrap();
        let r = s.service_rates(0.05, 200).unwrap();
        assert_eq!(r[0], 0.0);
        assert!((r[1] - rate_from_reliability(3.0, 2.0, 0.05, 200).unwrap()).abs() < 1e-15);
    }
}
