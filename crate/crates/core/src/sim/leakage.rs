//! Exact message-leakage accounting at exhaustively enumerable scale.
//!
//! For a one-block instance small enough to enumerate every
//! (message, key, observation) combination, the mutual information between
//! the message and Eve's observation is computed exactly, with an optional
//! Monte Carlo cross-estimate over the same model.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::prob::{Seed, StochasticKernel};

const MAX_ENUMERATION_TERMS: u128 = 100_000_000;

/// A one-block leakage instance: `message_values` codewords indexed by the
/// padded message `(m + key) mod message_values`, a uniform key over
/// `key_values` values, and Eve observing each codeword symbol through
/// `eve_kernel`.
#[derive(Debug, Clone)]
pub struct TinyLeakageConfig {
    pub message_values: usize,
    pub key_values: usize,
    pub codewords: Vec<Vec<usize>>,
    pub eve_kernel: StochasticKernel,
    pub mc_samples: u64,
    pub seed: Seed,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeakageReport {
    /// Exact `I(W; Y2)` in nats.
    pub exact_nats: f64,
    /// `H(W) = ln(message_values)`.
    pub message_entropy: f64,
    pub mc_estimate: f64,
    pub mc_sigma: f64,
}

/// Exact leakage by full enumeration, plus a seeded Monte Carlo
/// cross-estimate of the same quantity.
pub fn estimate_leakage(cfg: &TinyLeakageConfig) -> Result<LeakageReport> {
    let m_count = cfg.message_values;
    let k_count = cfg.key_values;
    if m_count < 1 || k_count < 1 || k_count > m_count {
        return Err(Error::RejectedInput(
            "need 1 <= key_values <= message_values".into(),
        ));
    }
    if cfg.codewords.len() != m_count {
        return Err(Error::DimensionMismatch {
            what: "codeword count",
            expected: m_count,
            got: cfg.codewords.len(),
        });
    }
    let block_len = cfg.codewords[0].len();
    if block_len == 0 || cfg.codewords.iter().any(|w| w.len() != block_len) {
        return Err(Error::RejectedInput("ragged or empty codewords".into()));
    }
    let y_size = cfg.eve_kernel.cols();
    for w in &cfg.codewords {
        for &x in w {
            if x >= cfg.eve_kernel.rows() {
                return Err(Error::RejectedInput(
                    "codeword symbol outside alphabet".into(),
                ));
            }
        }
    }
    let y_space = (y_size as u128).pow(block_len as u32);
    let terms = y_space * m_count as u128 * k_count as u128;
    if terms > MAX_ENUMERATION_TERMS {
        return Err(Error::RejectedInput(
            "enumeration too large for exact leakage".into(),
        ));
    }

    // p(y | codebook index a), for every y in the product space.
    let mut y = alloc::vec![0usize; block_len];
    let mut exact = 0.0f64;
    loop {
        // Likelihood of this observation under each codebook index.
        let like: Vec<f64> = (0..m_count)
            .map(|a| {
                let mut prod = 1.0;
                for (t, &yt) in y.iter().enumerate() {
                    prod *= cfg.eve_kernel.get(cfg.codewords[a][t], yt);
                }
                prod
            })
            .collect();
        // p(y | m) marginalized over the key; p(y) over messages too.
        let mut p_given_m = alloc::vec![0.0f64; m_count];
        for (m, pm) in p_given_m.iter_mut().enumerate() {
            for r in 0..k_count {
                *pm += like[(m + r) % m_count];
            }
            *pm /= k_count as f64;
        }
        let p_marginal: f64 = p_given_m.iter().sum::<f64>() / m_count as f64;
        if p_marginal > 0.0 {
            for &pm in &p_given_m {
                if pm > 0.0 {
                    exact += pm / m_count as f64 * libm::log(pm / p_marginal);
                }
            }
        }
        if !next_word(&mut y, y_size) {
            break;
        }
    }
    let exact_nats = exact.max(0.0);

    // Monte Carlo cross-check over the identical model.
    let mut rng = cfg.seed.rng();
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut y_sample = alloc::vec![0usize; block_len];
    for _ in 0..cfg.mc_samples {
        let m = rng.below(m_count);
        let r = rng.below(k_count);
        let word = &cfg.codewords[(m + r) % m_count];
        for (t, slot) in y_sample.iter_mut().enumerate() {
            let u = rng.uniform();
            let mut cum = 0.0;
            let mut picked = y_size - 1;
            for yv in 0..y_size {
                cum += cfg.eve_kernel.get(word[t], yv);
                if u < cum {
                    picked = yv;
                    break;
                }
            }
            *slot = picked;
        }
        let like = |a: usize| -> f64 {
            let mut prod = 1.0;
            for (t, &yt) in y_sample.iter().enumerate() {
                prod *= cfg.eve_kernel.get(cfg.codewords[a][t], yt);
            }
            prod
        };
        let mut p_m = 0.0;
        for rr in 0..k_count {
            p_m += like((m + rr) % m_count);
        }
        p_m /= k_count as f64;
        let mut p_all = 0.0;
        for mm in 0..m_count {
            for rr in 0..k_count {
                p_all += like((mm + rr) % m_count);
            }
        }
        p_all /= (m_count * k_count) as f64;
        let term = if p_m > 0.0 && p_all > 0.0 {
            libm::log(p_m / p_all)
        } else {
            0.0
        };
        sum += term;
        sum_sq += term * term;
    }
    let t = cfg.mc_samples.max(1) as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    let sigma = libm::sqrt(var / t);

    Ok(LeakageReport {
        exact_nats,
        message_entropy: libm::log(m_count as f64),
        mc_estimate: mean,
        mc_sigma: sigma,
    })
}

fn next_word(word: &mut [usize], base: usize) -> bool {
    for slot in word.iter_mut() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}
