//! Conversions between bits and nats.
//!
//! Rates are carried in bits per channel use, exponents and log-MGF values in
//! nats. Every crossing between the two goes through this module.

use std::f64::consts::{LN_2, LOG2_E};

#[inline]
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

#[inline]
pub fn nats_to_bits(nats: f64) -> f64 {
    nats * LOG2_E
}

/// Converts a delay exponent expressed against nat-valued rates into a per-bit
/// queue-length decay rate.
///
/// The service term `exp(-n·θ·R)` uses `R` in nats, while a queue measured in
/// bits sees `exp(-θ_bit · n·R_bits)`; hence `θ_bit = θ·ln 2`.
#[inline]
pub fn delay_exponent_per_bit(theta_delay: f64) -> f64 {
    theta_delay * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [0.0, 1.0, 3.5, 1e-9, 123.0] {
            assert!((nats_to_bits(bits_to_nats(x)) - x).abs() <= 1e-15 * (1.0 + x));
        }
        assert!((bits_to_nats(1.0) - LN_2).abs() < 1e-16);
    }
}
