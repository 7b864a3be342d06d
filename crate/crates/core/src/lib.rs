//! Numerical toolkit for secure integrated sensing and communication over
//! finite state-dependent channels.
//!
//! The crate is organized in five layers:
//!
//! - [`prob`]: finite-alphabet probability primitives (pmfs, row-stochastic
//!   kernels, seeded sampling, empirical types);
//! - [`metrics`]: scalar information measures (KL, Chernoff, mutual
//!   information, conditional entropy, martingale/MGF exponents);
//! - [`family`]: state-indexed channel families with model validation and
//!   the universal maximin sensing input;
//! - [`region`]: the achievable (rate, Tx exponent, Eve exponent) region,
//!   soft-covering exponents, resolvability membership, and boundary sweeps;
//! - [`sim`]: a Monte Carlo simulator of the sequential block-adaptive
//!   transmission policy, with exponent estimation and exact small-instance
//!   leakage accounting.
//!
//! All internal rates and divergences are in nats; conversion to bits is the
//! caller's concern. The crate is `no_std`-compatible (`alloc` required);
//! enable the `std` feature (default) for `std::error::Error` integration.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod family;
pub mod metrics;
pub mod prob;
pub mod region;
pub mod sim;

pub use error::Error;
pub use family::StateChannelFamily;
pub use prob::{Pmf, Seed, StochasticKernel};
pub use region::InputPolicy;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::prob::{Pmf, Rng, StochasticKernel};
    use alloc::vec::Vec;

    pub fn random_pmf(n: usize, rng: &mut Rng) -> Pmf {
        let raw: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-3).collect();
        let sum: f64 = raw.iter().sum();
        Pmf::new(raw.iter().map(|x| x / sum).collect()).unwrap()
    }

    pub fn random_kernel(rows: usize, cols: usize, rng: &mut Rng) -> StochasticKernel {
        StochasticKernel::from_rows(
            (0..rows)
                .map(|_| random_pmf(cols, rng).probs().to_vec())
                .collect(),
        )
        .unwrap()
    }
}

/// Absolute tolerance for pmf normalization checks.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Tolerance used for scalar comparisons (min/max ties, membership tests).
pub const CMP_TOLERANCE: f64 = 1e-12;

/// Nats-to-bits conversion factor (divide nats by this to get bits).
pub const LN_2: f64 = core::f64::consts::LN_2;
