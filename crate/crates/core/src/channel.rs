//! Quasi-static Rayleigh-fading MIMO link between the transmit array and one
//! ground device.
//!
//! A realization is `H = sqrt(ξ)·G`, with `G` an `n_rx × n_tx` matrix of
//! i.i.d. unit-variance circularly symmetric complex Gaussians. Path loss lives
//! only in [`ChannelConfig::average_snr`]; the eigenvalues of `H·Hᴴ` never
//! carry it.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise power used throughout the reference experiments (linear watts).
pub const DEFAULT_NOISE_POWER: f64 = 0.1;

fn unit() -> f64 {
    1.0
}

/// Per-user physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Aggregated transmit antennas `N_T`.
    pub n_tx: usize,
    /// Receive antennas `N_R`.
    pub n_rx: usize,
    /// Transmit power `P` (linear watts).
    pub power: f64,
    /// Link distance `d` (meters).
    pub distance: f64,
    /// Path-loss exponent `τ`.
    pub path_exponent: f64,
    /// Noise power `σ²` (linear watts).
    pub noise_power: f64,
    /// Large-scale fading coefficient `ξ`, scaling every realization.
    #[serde(default = "unit")]
    pub large_scale: f64,
}

impl ChannelConfig {
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        power: f64,
        distance: f64,
        path_exponent: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let cfg = Self { n_tx, n_rx, power, distance, path_exponent, noise_power, large_scale: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit-distance link with the default noise power and the transmit power
    /// chosen so that the average SNR equals `snr_db`.
    pub fn from_snr_db(n_tx: usize, n_rx: usize, snr_db: f64) -> Result<Self> {
        let power = DEFAULT_NOISE_POWER * 10f64.powf(snr_db / 10.0);
        Self::new(n_tx, n_rx, power, 1.0, 2.0, DEFAULT_NOISE_POWER)
    }

    pub fn with_large_scale(mut self, xi: f64) -> Result<Self> {
        self.large_scale = xi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::config("antenna counts must be at least 1"));
        }
        let finite = [self.power, self.distance, self.path_exponent, self.noise_power, self.large_scale];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("channel parameters must be finite"));
        }
        if self.power < 0.0 {
            return Err(Error::config("power must be nonnegative"));
        }
        if self.distance <= 0.0 {
            return Err(Error::config("distance must be positive"));
        }
        if self.path_exponent < 0.0 {
            return Err(Error::config("path exponent must be nonnegative"));
        }
        if self.noise_power <= 0.0 {
            return Err(Error::config("noise power must be positive"));
        }
        if self.large_scale <= 0.0 {
            return Err(Error::config("large-scale fading coefficient must be positive"));
        }
        Ok(())
    }

    /// Linear average SNR `P·d^(−τ)/σ²`.
    pub fn average_snr(&self) -> f64 {
        self.power * self.distance.powf(-self.path_exponent) / self.noise_power
    }

    /// Number of nonzero eigenmodes, `min(N_T, N_R)`.
    pub fn modes(&self) -> usize {
        self.n_tx.min(self.n_rx)
    }

    /// Per-mode SNR scale `SNR/N_T`.
    pub fn mode_snr_scale(&self) -> f64 {
        self.average_snr() / self.n_tx as f64
    }
}

/// One fading draw: `matrix` holds `G`, `large_scale` holds `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub matrix: DMatrix<Complex<f64>>,
    pub large_scale: f64,
}

impl ChannelRealization {
    pub fn new(matrix: DMatrix<Complex<f64>>, large_scale: f64) -> Self {
        Self { matrix, large_scale }
    }

    /// Squared Frobenius norm of `H = sqrt(ξ)·G`.
    pub fn frobenius_sq(&self) -> f64 {
        self.large_scale * self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn negated(&self) -> Self {
        Self { matrix: -self.matrix.clone(), large_scale: self.large_scale }
    }
}

/// Nonzero spectrum of `H·Hᴴ`, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSample {
    pub eigenvalues: Vec<f64>,
}

impl EigenSample {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidMatrix(format!("eigenvalues must be finite and nonnegative: {eigenvalues:?}")));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `Σ ln λ_i`; `-inf` if any eigenvalue is zero.
    pub fn log_product(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.ln()).sum()
    }
}

/// Rng for the `index`-th realization of stream `seed`. Each index owns a
/// disjoint ChaCha stream, so any realization can be replayed on its own.
pub(crate) fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic draw of realization `index` from stream `seed`.
pub fn sample_channel(config: &ChannelConfig, seed: u64, index: u64) -> ChannelRealization {
    let mut rng = substream(seed, index);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let matrix = DMatrix::from_fn(config.n_rx, config.n_tx, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex::new(re * scale, im * scale)
    });
    ChannelRealization { matrix, large_scale: config.large_scale }
}

/// Nonzero eigenvalues of `H·Hᴴ`, computed from the smaller of the two Gram
/// matrices with a Hermitian eigen-solver.
pub fn gram_eigenvalues(r: &ChannelRealization) -> Result<EigenSample> {
    let h = &r.matrix;
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !r.large_scale.is_finite() {
        return Err(Error::InvalidMatrix("channel matrix has non-finite entries".into()));
    }
    let (rows, cols) = h.shape();
    if rows.min(cols) == 1 {
        return EigenSample::new(vec![r.frobenius_sq()]);
    }
    let gram = if rows <= cols { h * h.adjoint() } else { h.adjoint() * h };
    let values = gram.symmetric_eigenvalues();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("eigen-solver returned non-finite values".into()));
    }
    // round-off can push a zero eigenvalue slightly negative
    EigenSample::new(values.iter().map(|v| v.max(0.0) * r.large_scale).collect())
}

/// Per-eigenmode SNRs `(SNR/N_T)·λ_i`, in eigenvalue order.
pub fn eigen_snrs(config: &ChannelConfig, e: &EigenSample) -> Vec<f64> {
    let scale = config.mode_snr_scale();
    e.eigenvalues.iter().map(|l| scale * l).collect()
}
