//! Finite-blocklength statistical QoS analysis for MIMO Rayleigh fading links.
//!
//! The crate computes the normal-approximation coding rate, the Gallager-type
//! error-rate exponent, the ε-effective capacity with its log-MGF, and the
//! feasible delay/reliability region, all evaluated by seeded Monte Carlo with
//! common random numbers. A discrete-time queue simulator checks the
//! large-deviations meaning of the delay exponent operationally.
//!
//! Units: rates in bits per channel use, exponents and log-MGF values in nats.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod effective_capacity;
pub mod error;
pub mod error_exponent;
pub mod experiment;
pub mod fbc_rate;
pub mod montecarlo;
pub mod numeric;
pub mod qos_region;
pub mod queue_sim;
pub mod units;

pub use channel::{ChannelConfig, ChannelRealization, EigenSample};
pub use effective_capacity::{EcSurfacePoint, QosPair, ServiceModel};
pub use error::{Error, Result};
pub use error_exponent::{ExponentModel, ExponentResult};
pub use fbc_rate::{FadingStates, RatePoint};
pub use montecarlo::{EigenEnsemble, MonteCarloEstimate, MonteCarloSpec};
pub use qos_region::{ParetoCurve, RegionQuery};
pub use queue_sim::QueueTrace;
