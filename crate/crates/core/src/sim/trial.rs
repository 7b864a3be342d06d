//! Sequential block-adaptive transmission trials.
//!
//! One trial simulates the full policy: an initial universal sensing phase
//! of `ceil(n^beta)` blocks drawn i.i.d. from the maximin input, then
//! feedback-adaptive blocks whose codeword type follows the transmitter's
//! running state estimate, each block split into a constant-composition
//! message portion and a type-signaling tail. Transmission stops at the
//! first block boundary where some hypothesis' log-likelihood lead clears
//! its threshold `c_s = n (min_{s'} D(w1[s] || w1[s'] | P_s) - eps)`, or is
//! censored at the horizon.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{universal_input, StateChannelFamily};
use crate::metrics::conditional_kl;
use crate::prob::{push_forward, Pmf, Rng, Seed, StreamRole};
use crate::region::{r1_r2_rkey, InputPolicy};
use crate::sim::codebook::{
    build_codebook, constant_composition_word, round_composition, Codebook,
};

const LOG_FLOOR: f64 = -1e300;

fn ln_clamped(v: f64) -> f64 {
    if v > 0.0 {
        libm::log(v)
    } else {
        LOG_FLOOR
    }
}

/// How the eavesdropper evaluates her per-state likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EveMode {
    /// Single-letter surrogate: each symbol scored against the induced
    /// output marginal of its schedule segment.
    IidSurrogate,
    /// Exact per-block mixture over the (uncapped) codebook of the
    /// hypothesized state, conditioning on the estimate trajectory having
    /// locked onto that state; feasible only at desk scale.
    ExactMixture,
    /// Mismatch variant: the per-block mixture additionally marginalizes
    /// the codeword type with uniform weights instead of conditioning on
    /// the trajectory.
    ExactMixtureMarginal,
}

impl EveMode {
    fn exact(self) -> bool {
        matches!(self, EveMode::ExactMixture | EveMode::ExactMixtureMarginal)
    }
}

/// Classification of a channel use within the block schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Universal,
    Message,
    TypeSignal,
}

/// Deterministic block layout of a simulation run.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub block_len: usize,
    pub universal_blocks: usize,
    /// Message-portion length of each adaptive block.
    pub msg_len: usize,
    /// Type-signaling length of each adaptive block.
    pub sig_len: usize,
    /// Horizon in blocks (censoring point).
    pub max_blocks: usize,
}

impl Schedule {
    /// Segment of the 0-based symbol index `t`.
    pub fn kind_at(&self, t: usize) -> SegmentKind {
        let block = t / self.block_len;
        if block < self.universal_blocks {
            SegmentKind::Universal
        } else if t % self.block_len < self.msg_len {
            SegmentKind::Message
        } else {
            SegmentKind::TypeSignal
        }
    }

    pub fn horizon(&self) -> usize {
        self.block_len * self.max_blocks
    }

    pub fn adaptive_blocks(&self) -> usize {
        self.max_blocks.saturating_sub(self.universal_blocks)
    }
}

/// Full configuration of a simulation campaign.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub family: StateChannelFamily,
    pub policy: InputPolicy,
    /// Stopping-time constraint; block length is `ceil(sqrt(n))` and the
    /// thresholds scale with this value.
    pub n: usize,
    /// Universal phase spans `ceil(n^beta)` blocks, `beta` in (0, 1/2).
    pub beta: f64,
    /// Fraction of each adaptive block reserved for type signaling.
    pub delta: f64,
    /// Threshold slack (nats) subtracted from the sensing divergence.
    pub epsilon: f64,
    pub true_state: usize,
    pub trials: u64,
    pub seed: Seed,
    pub codebook_cap: usize,
    pub eve_mode: EveMode,
    /// Universal input override; computed from the family when absent.
    pub p_tilde: Option<Pmf>,
    /// Censoring horizon in channel uses (defaults to `n`).
    pub censor_at: Option<usize>,
    /// Draw real codebooks and run the receiver decode path.
    pub simulate_decoding: bool,
    /// Explicit codebook index rates (nats/use) replacing the per-type
    /// rate triple derived from the policy.
    pub rates_override: Option<[f64; 3]>,
    /// Keep the per-block estimate list in each trace.
    pub record_blocks: bool,
    /// Keep full symbol sequences in each trace (large; off by default).
    pub record_symbols: bool,
}

impl SimConfig {
    pub fn new(
        family: StateChannelFamily,
        policy: InputPolicy,
        n: usize,
        true_state: usize,
        trials: u64,
        seed: Seed,
    ) -> Self {
        SimConfig {
            family,
            policy,
            n,
            beta: 0.25,
            delta: 0.1,
            epsilon: 0.0,
            true_state,
            trials,
            seed,
            codebook_cap: 4096,
            eve_mode: EveMode::IidSurrogate,
            p_tilde: None,
            censor_at: None,
            simulate_decoding: false,
            rates_override: None,
            record_blocks: true,
            record_symbols: false,
        }
    }
}

/// Per-trial record.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialTrace {
    pub trial_id: u64,
    /// Stopping time in channel uses (the censoring horizon if censored).
    pub tau: usize,
    pub censored: bool,
    /// Hypothesis whose likelihood lead triggered the stop.
    pub stop_state: usize,
    /// Maximum-likelihood state estimate at the end of the trial.
    pub s_hat_tx: usize,
    pub s_hat_eve: usize,
    /// Spread (max minus min) of Eve's per-state scores at decision time.
    pub eve_score_spread: f64,
    /// Analytic message bits across adaptive blocks.
    pub bits_sent: u64,
    pub universal_symbols: usize,
    pub message_symbols: usize,
    pub signal_symbols: usize,
    pub adaptive_blocks: u32,
    /// Adaptive blocks whose type matched the true state.
    pub correct_type_blocks: u32,
    pub per_block_estimates: Vec<u8>,
    pub decode_blocks: u32,
    pub decode_failures: u32,
    /// Full symbol dumps, present only with `record_symbols`.
    pub x_seq: Vec<u8>,
    pub y1_seq: Vec<u8>,
    pub y2_seq: Vec<u8>,
}

/// Aggregate estimates over a campaign.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub n: usize,
    pub trials: u64,
    pub censored: u64,
    /// Trials whose final Tx estimate missed the true state (stopped only).
    pub d1_wrong: u64,
    /// Trials whose Eve estimate missed the true state (stopped only).
    pub d2_wrong: u64,
    /// Conservative detection-error estimates counting censored trials as
    /// errors.
    pub p_d1: f64,
    pub p_d2: f64,
    /// Error shares excluding the censoring mass from the numerator.
    pub p_d1_errors_only: f64,
    pub p_d2_errors_only: f64,
    pub p_censored: f64,
    pub mean_tau: f64,
    /// Empirical `P(tau > n')` at every block boundary.
    pub tau_tail: Vec<(usize, f64)>,
    /// Quantiles (q, bits-per-use) of the analytic rate over non-censored
    /// trials.
    pub rate_quantiles: Vec<(f64, f64)>,
    /// Share of adaptive blocks whose type matched the true state.
    pub correct_estimate_fraction: f64,
    pub max_eve_score_spread: f64,
    pub decode_blocks: u64,
    pub decode_failures: u64,
    /// Trials that had at least one failed block decode.
    pub trials_with_decode_failure: u64,
}

/// Precomputed tables for a configuration; trials are pure functions of
/// `(context, trial_id)`.
pub struct SimContext {
    cfg: SimConfig,
    schedule: Schedule,
    p_tilde: Pmf,
    /// Stopping thresholds `c_s`.
    thresholds: Vec<f64>,
    /// True when every threshold is non-positive (stop at first boundary).
    pub degenerate_thresholds: bool,
    ln_w1: Vec<Vec<f64>>,
    ln_w2: Vec<Vec<f64>>,
    /// Cumulative joint output rows for the true state.
    joint_cum: Vec<Vec<f64>>,
    /// Eve surrogate tables: universal/type segments and message segments.
    eve_univ: Vec<Vec<f64>>,
    eve_msg: Vec<Vec<f64>>,
    /// Hypothesis-dependent input log-probabilities on message segments.
    ln_input_msg: Vec<Vec<f64>>,
    /// Per-type codebook index rates and analytic bits per adaptive block.
    codebook_rates: Vec<[f64; 3]>,
    block_bits: Vec<u64>,
    /// Rounded universal composition for the type-signal codebook.
    sig_counts: Vec<usize>,
    msg_counts: Vec<Vec<usize>>,
    /// Smallest state index sharing each state's input distribution:
    /// identical types draw identical codebooks (an open-loop policy uses
    /// one state-independent codebook).
    canonical_type: Vec<usize>,
}

impl SimContext {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        let fam = &cfg.family;
        cfg.policy.validate_for(fam)?;
        if cfg.true_state >= fam.num_states() {
            return Err(Error::RejectedInput("true state outside family".into()));
        }
        if cfg.trials == 0 {
            return Err(Error::RejectedInput("zero trials".into()));
        }
        if !(cfg.beta > 0.0 && cfg.beta < 0.5) {
            return Err(Error::RejectedInput("beta outside (0, 1/2)".into()));
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::RejectedInput("delta outside (0, 1)".into()));
        }
        if cfg.codebook_cap < 2 {
            return Err(Error::RejectedInput("codebook cap below 2".into()));
        }
        let n = cfg.n;
        let block_len = libm::ceil(libm::sqrt(n as f64)) as usize;
        if block_len < 2 {
            return Err(Error::RejectedInput("horizon too small for blocks".into()));
        }
        let universal_blocks = libm::ceil(libm::pow(n as f64, cfg.beta)) as usize;
        if universal_blocks * block_len >= n {
            return Err(Error::RejectedInput(
                "universal phase exhausts the horizon".into(),
            ));
        }
        let sig_len = ((cfg.delta * block_len as f64) as usize).max(1);
        let msg_len = block_len - sig_len;
        if msg_len == 0 {
            return Err(Error::RejectedInput(
                "type signaling fills the block".into(),
            ));
        }
        let censor = cfg.censor_at.unwrap_or(n).max(n);
        let max_blocks = censor / block_len;
        if max_blocks <= universal_blocks {
            return Err(Error::RejectedInput(
                "censoring point inside the universal phase".into(),
            ));
        }
        let schedule = Schedule {
            block_len,
            universal_blocks,
            msg_len,
            sig_len,
            max_blocks,
        };

        let p_tilde = match &cfg.p_tilde {
            Some(p) => {
                if p.alphabet_size() != fam.input_size() {
                    return Err(Error::DimensionMismatch {
                        what: "universal input alphabet",
                        expected: fam.input_size(),
                        got: p.alphabet_size(),
                    });
                }
                p.clone()
            }
            None => universal_input(fam, 256)?.p_tilde,
        };

        let states = fam.num_states();
        let mut thresholds = Vec::with_capacity(states);
        for s in 0..states {
            let mut d = f64::INFINITY;
            for s_prime in 0..states {
                if s_prime != s {
                    d = d.min(conditional_kl(
                        fam.w1(s),
                        fam.w1(s_prime),
                        cfg.policy.input(s),
                    )?);
                }
            }
            thresholds.push(n as f64 * (d - cfg.epsilon));
        }
        let degenerate_thresholds = thresholds.iter().all(|&c| c <= 0.0);

        let y1 = fam.y1_size();
        let y2 = fam.y2_size();
        let xs = fam.input_size();
        let ln_w1 = (0..states)
            .map(|s| {
                (0..xs * y1)
                    .map(|i| ln_clamped(fam.w1(s).get(i / y1, i % y1)))
                    .collect()
            })
            .collect();
        let ln_w2 = (0..states)
            .map(|s| {
                (0..xs * y2)
                    .map(|i| ln_clamped(fam.w2(s).get(i / y2, i % y2)))
                    .collect()
            })
            .collect();

        let joint = fam.w_joint(cfg.true_state);
        let joint_cum = (0..xs)
            .map(|x| {
                let mut cum = Vec::with_capacity(joint.cols());
                let mut acc = 0.0;
                for y in 0..joint.cols() {
                    acc += joint.get(x, y);
                    cum.push(acc);
                }
                cum
            })
            .collect();

        let mut eve_univ = Vec::with_capacity(states);
        let mut eve_msg = Vec::with_capacity(states);
        let mut ln_input_msg = Vec::with_capacity(states);
        for s in 0..states {
            let q_univ = push_forward(&p_tilde, fam.w2(s))?;
            let q_msg = push_forward(cfg.policy.input(s), fam.w2(s))?;
            eve_univ.push(q_univ.probs().iter().map(|&v| ln_clamped(v)).collect());
            eve_msg.push(q_msg.probs().iter().map(|&v| ln_clamped(v)).collect());
            ln_input_msg.push(
                cfg.policy
                    .input(s)
                    .probs()
                    .iter()
                    .map(|&v| ln_clamped(v))
                    .collect(),
            );
        }

        let mut codebook_rates = Vec::with_capacity(states);
        let mut block_bits = Vec::with_capacity(states);
        let mut msg_counts = Vec::with_capacity(states);
        for t in 0..states {
            let rates = r1_r2_rkey(fam, &cfg.policy, t)?;
            let triple = cfg.rates_override.unwrap_or([
                (rates.r1 + rates.r_key - rates.r2).max(0.0),
                (rates.r2 - rates.r_key).max(0.0),
                (rates.r2 - rates.r1).max(0.0),
            ]);
            codebook_rates.push(triple);
            let rate_nats = if rates.r1 >= (rates.r2 - rates.r_key).max(0.0) {
                (rates.r1 - rates.r2 + rates.r2.min(rates.r_key)).max(0.0)
            } else {
                rates.r1.min(rates.r_key)
            };
            block_bits.push(libm::floor(msg_len as f64 * rate_nats / crate::LN_2) as u64);
            msg_counts.push(round_composition(cfg.policy.input(t), msg_len));
        }

        if cfg.eve_mode.exact() {
            for t in 0..states {
                let natural: f64 = codebook_rates[t]
                    .iter()
                    .map(|&r| libm::ceil(libm::exp(r * msg_len as f64)))
                    .product();
                if natural > cfg.codebook_cap as f64 {
                    return Err(Error::RejectedInput(
                        "exact-mixture mode needs the uncapped codebook to fit the cap".into(),
                    ));
                }
            }
        }

        let sig_counts = round_composition(&p_tilde, sig_len);
        let canonical_type: Vec<usize> = (0..states)
            .map(|t| {
                (0..=t)
                    .find(|&t2| cfg.policy.input(t2).probs() == cfg.policy.input(t).probs())
                    .unwrap_or(t)
            })
            .collect();

        Ok(SimContext {
            cfg,
            schedule,
            p_tilde,
            thresholds,
            degenerate_thresholds,
            ln_w1,
            ln_w2,
            joint_cum,
            eve_univ,
            eve_msg,
            ln_input_msg,
            codebook_rates,
            block_bits,
            sig_counts,
            msg_counts,
            canonical_type,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn p_tilde(&self) -> &Pmf {
        &self.p_tilde
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn sample_joint(&self, x: usize, rng: &mut Rng) -> (usize, usize) {
        let u = rng.uniform();
        let cum = &self.joint_cum[x];
        let mut idx = cum.len() - 1;
        for (i, &c) in cum.iter().enumerate() {
            if u < c {
                idx = i;
                break;
            }
        }
        let y2 = self.cfg.family.y2_size();
        (idx / y2, idx % y2)
    }

    fn msg_codebook(&self, trial_id: u64, block: usize, t: usize) -> Codebook {
        let t = self.canonical_type[t];
        let seed = self.cfg.seed.derive(
            StreamRole::Codebook,
            trial_id,
            ((block as u64) << 8) | t as u64,
        );
        build_codebook(
            self.cfg.policy.input(t),
            self.schedule.msg_len,
            self.codebook_rates[t],
            self.cfg.codebook_cap,
            seed,
        )
        .expect("validated codebook parameters")
    }

    /// Type-signal word set for one block. Words must be pairwise distinct
    /// to carry the type index; duplicates are redrawn (bounded attempts,
    /// so a type class smaller than the state count degrades gracefully).
    fn sig_words(&self, trial_id: u64, block: usize) -> Vec<Vec<usize>> {
        let mut rng = self
            .cfg
            .seed
            .derive(StreamRole::TypeCodebook, trial_id, block as u64)
            .rng();
        let mut words: Vec<Vec<usize>> = Vec::with_capacity(self.cfg.family.num_states());
        for _ in 0..self.cfg.family.num_states() {
            let mut word = constant_composition_word(&self.sig_counts, &mut rng);
            for _ in 0..64 {
                if !words.contains(&word) {
                    break;
                }
                word = constant_composition_word(&self.sig_counts, &mut rng);
            }
            words.push(word);
        }
        words
    }

    /// Runs one trial. Identical `(config, trial_id)` produce bit-identical
    /// traces regardless of scheduling.
    pub fn run_trial(&self, trial_id: u64) -> TrialTrace {
        let cfg = &self.cfg;
        let states = cfg.family.num_states();
        let sched = &self.schedule;
        let y1_cols = cfg.family.y1_size();
        let y2_cols = cfg.family.y2_size();
        let full_codebooks = cfg.simulate_decoding || cfg.eve_mode.exact();

        let mut noise = cfg.seed.derive(StreamRole::TrialNoise, trial_id, 0).rng();

        let mut ll_w1 = vec![0.0f64; states];
        let mut input_ll = vec![0.0f64; states];
        let mut eve_ll = vec![0.0f64; states];

        let mut universal_symbols = 0usize;
        let mut message_symbols = 0usize;
        let mut signal_symbols = 0usize;
        let mut bits_sent = 0u64;
        let mut adaptive_blocks = 0u32;
        let mut correct_type_blocks = 0u32;
        let mut per_block_estimates = Vec::new();
        let mut decode_blocks = 0u32;
        let mut decode_failures = 0u32;

        let mut stopped = false;
        let mut stop_state = 0usize;
        let mut tau = sched.horizon();

        let mut y2_block: Vec<usize> = Vec::with_capacity(sched.block_len);
        let mut y1_block: Vec<usize> = Vec::with_capacity(sched.block_len);
        let mut x_dump: Vec<u8> = Vec::new();
        let mut y1_dump: Vec<u8> = Vec::new();
        let mut y2_dump: Vec<u8> = Vec::new();

        'blocks: for block in 0..sched.max_blocks {
            let universal = block < sched.universal_blocks;
            y2_block.clear();
            y1_block.clear();

            // Assemble this block's input sequence.
            let mut block_meta: Option<BlockMeta> = None;
            let inputs: Vec<usize> = if universal {
                (0..sched.block_len)
                    .map(|_| self.p_tilde.sample(&mut noise))
                    .collect()
            } else {
                let t_hat = argmax_tie_low(&ll_w1);
                adaptive_blocks += 1;
                if t_hat == cfg.true_state {
                    correct_type_blocks += 1;
                }
                if cfg.record_blocks {
                    per_block_estimates.push(t_hat as u8);
                }
                bits_sent += self.block_bits[t_hat];

                let mut keys = cfg
                    .seed
                    .derive(StreamRole::Keys, trial_id, block as u64)
                    .rng();
                let (word, meta) = if full_codebooks {
                    let cb = self.msg_codebook(trial_id, block, t_hat);
                    let m = keys.below(cb.dims[0]);
                    let n_idx = keys.below(cb.dims[1]);
                    let r1 = keys.below(cb.dims[2]);
                    let r2 = keys.below(cb.dims[0]);
                    let type_key = keys.below(states);
                    let a = (m + r2) % cb.dims[0];
                    let word = cb.word(a, n_idx, r1).to_vec();
                    (
                        word,
                        BlockMeta {
                            t_hat,
                            m,
                            r1,
                            r2,
                            type_key,
                        },
                    )
                } else {
                    // Distribution-equivalent shortcut: one fresh
                    // constant-composition word instead of a full codebook.
                    let canonical = self.canonical_type[t_hat];
                    let mut cb_rng = cfg
                        .seed
                        .derive(
                            StreamRole::Codebook,
                            trial_id,
                            ((block as u64) << 8) | canonical as u64,
                        )
                        .rng();
                    let word = constant_composition_word(&self.msg_counts[t_hat], &mut cb_rng);
                    let type_key = keys.below(states);
                    (
                        word,
                        BlockMeta {
                            t_hat,
                            m: 0,
                            r1: 0,
                            r2: 0,
                            type_key,
                        },
                    )
                };
                let sig = self.sig_words(trial_id, block);
                let sig_idx = (meta.t_hat + meta.type_key) % states;
                let mut seq = word;
                seq.extend_from_slice(&sig[sig_idx]);
                block_meta = Some(meta);
                seq
            };

            // Transmit the block symbol by symbol.
            for (offset, &x) in inputs.iter().enumerate() {
                let (y1, y2) = self.sample_joint(x, &mut noise);
                for s in 0..states {
                    ll_w1[s] += self.ln_w1[s][x * y1_cols + y1];
                }
                if universal {
                    universal_symbols += 1;
                    for s in 0..states {
                        eve_ll[s] += self.eve_univ[s][y2];
                    }
                } else if offset < sched.msg_len {
                    message_symbols += 1;
                    for s in 0..states {
                        input_ll[s] += self.ln_input_msg[s][x];
                        if cfg.eve_mode == EveMode::IidSurrogate {
                            eve_ll[s] += self.eve_msg[s][y2];
                        }
                    }
                } else {
                    signal_symbols += 1;
                    if cfg.eve_mode == EveMode::IidSurrogate {
                        for s in 0..states {
                            eve_ll[s] += self.eve_univ[s][y2];
                        }
                    }
                }
                y1_block.push(y1);
                y2_block.push(y2);
                if cfg.record_symbols {
                    x_dump.push(x as u8);
                    y1_dump.push(y1 as u8);
                    y2_dump.push(y2 as u8);
                }
            }

            // Exact-mixture accumulation once the block is complete.
            // Universal blocks carry i.i.d. inputs, so their exact
            // likelihood equals the surrogate product already accumulated
            // in the per-symbol loop.
            if cfg.eve_mode.exact() && !universal {
                let msg_y2 = &y2_block[..sched.msg_len];
                let sig_y2 = &y2_block[sched.msg_len..];
                let sig = self.sig_words(trial_id, block);
                for s in 0..states {
                    let msg_ll = match cfg.eve_mode {
                        EveMode::ExactMixture => {
                            let cb = self.msg_codebook(trial_id, block, s);
                            mixture_block_ll(msg_y2, cb.words(), &self.ln_w2[s], y2_cols)
                        }
                        EveMode::ExactMixtureMarginal => {
                            // Uniform over the hypothesized codeword type.
                            let per_type: Vec<f64> = (0..states)
                                .map(|t| {
                                    let cb = self.msg_codebook(trial_id, block, t);
                                    mixture_block_ll(msg_y2, cb.words(), &self.ln_w2[s], y2_cols)
                                })
                                .collect();
                            log_sum_exp(&per_type) - libm::log(states as f64)
                        }
                        EveMode::IidSurrogate => unreachable!(),
                    };
                    eve_ll[s] += msg_ll;
                    eve_ll[s] += mixture_block_ll(
                        sig_y2,
                        sig.iter().map(|w| w.as_slice()),
                        &self.ln_w2[s],
                        y2_cols,
                    );
                }
            }

            // Receiver decode of adaptive blocks.
            if cfg.simulate_decoding {
                if let Some(meta) = &block_meta {
                    decode_blocks += 1;
                    let sig = self.sig_words(trial_id, block);
                    let sig_y1 = &y1_block[sched.msg_len..];
                    let w_hat = self.joint_ml_word(sig_y1, &sig);
                    let t_decoded = (w_hat + states - meta.type_key % states) % states;
                    let mut ok = t_decoded == meta.t_hat;
                    if ok {
                        let cb = self.msg_codebook(trial_id, block, t_decoded);
                        let msg_y1 = &y1_block[..sched.msg_len];
                        let m_hat = ml_message(
                            msg_y1,
                            &cb,
                            &self.ln_w1[t_decoded],
                            y1_cols,
                            meta.r1,
                            meta.r2,
                        );
                        ok = m_hat == meta.m;
                    }
                    if !ok {
                        decode_failures += 1;
                    }
                }
            }

            // Stopping rule at the block boundary.
            let boundary = (block + 1) * sched.block_len;
            for s in 0..states {
                let score = ll_w1[s] + input_ll[s];
                let mut rival = f64::NEG_INFINITY;
                for s2 in 0..states {
                    if s2 != s {
                        rival = rival.max(ll_w1[s2] + input_ll[s2]);
                    }
                }
                if score - rival >= self.thresholds[s] {
                    stopped = true;
                    stop_state = s;
                    tau = boundary;
                    break 'blocks;
                }
            }
        }

        let s_hat_tx = argmax_tie_low(&ll_w1);
        let s_hat_eve = argmax_tie_low(&eve_ll);
        let spread = eve_ll.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - eve_ll.iter().fold(f64::INFINITY, |a, &b| a.min(b));

        TrialTrace {
            trial_id,
            tau,
            censored: !stopped,
            stop_state,
            s_hat_tx,
            s_hat_eve,
            eve_score_spread: spread,
            bits_sent,
            universal_symbols,
            message_symbols,
            signal_symbols,
            adaptive_blocks,
            correct_type_blocks,
            per_block_estimates,
            decode_blocks,
            decode_failures,
            x_seq: x_dump,
            y1_seq: y1_dump,
            y2_seq: y2_dump,
        }
    }

    fn joint_ml_word(&self, y1_seg: &[usize], words: &[Vec<usize>]) -> usize {
        let states = self.cfg.family.num_states();
        let y1_cols = self.cfg.family.y1_size();
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for (w, word) in words.iter().enumerate() {
            for s in 0..states {
                let mut ll = 0.0;
                for (t, &y) in y1_seg.iter().enumerate() {
                    ll += self.ln_w1[s][word[t] * y1_cols + y];
                }
                if ll > best {
                    best = ll;
                    arg = w;
                }
            }
        }
        arg
    }
}

struct BlockMeta {
    t_hat: usize,
    m: usize,
    r1: usize,
    r2: usize,
    type_key: usize,
}

fn argmax_tie_low(values: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            arg = i;
        }
    }
    arg
}

/// Log of the uniform mixture likelihood of one observed block over a word
/// set: `ln (1/M) Σ_w exp Σ_t ln w(y_t | x_w(t))`.
fn mixture_block_ll<'a>(
    y_seg: &[usize],
    words: impl Iterator<Item = &'a [usize]>,
    ln_w: &[f64],
    cols: usize,
) -> f64 {
    let mut lls: Vec<f64> = Vec::new();
    for word in words {
        let mut ll = 0.0;
        for (t, &y) in y_seg.iter().enumerate() {
            ll += ln_w[word[t] * cols + y];
        }
        lls.push(ll);
    }
    log_sum_exp(&lls) - libm::log(lls.len() as f64)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

fn ml_message(
    y1_seg: &[usize],
    cb: &Codebook,
    ln_w1_s: &[f64],
    y1_cols: usize,
    r1: usize,
    r2: usize,
) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    let r1 = r1 % cb.dims[2];
    for a in 0..cb.dims[0] {
        for n_idx in 0..cb.dims[1] {
            let word = cb.word(a, n_idx, r1);
            let mut ll = 0.0;
            for (t, &y) in y1_seg.iter().enumerate() {
                ll += ln_w1_s[word[t] * y1_cols + y];
            }
            if ll > best {
                best = ll;
                arg = a;
            }
        }
    }
    (arg + cb.dims[0] - r2 % cb.dims[0]) % cb.dims[0]
}

/// Maximum-likelihood state estimate from paired input/output sequences:
/// `argmax_s Σ_t ln w1[s](y1_t | x_t)`, ties toward the smaller index.
pub fn tx_mle(x_seq: &[usize], y1_seq: &[usize], fam: &StateChannelFamily) -> Result<usize> {
    if x_seq.is_empty() || x_seq.len() != y1_seq.len() {
        return Err(Error::RejectedInput(
            "state estimation needs equal-length non-empty sequences".into(),
        ));
    }
    let cols = fam.y1_size();
    let mut scores = vec![0.0f64; fam.num_states()];
    for (&x, &y) in x_seq.iter().zip(y1_seq) {
        if x >= fam.input_size() || y >= cols {
            return Err(Error::RejectedInput("symbol outside alphabet".into()));
        }
        for (s, score) in scores.iter_mut().enumerate() {
            *score += ln_clamped(fam.w1(s).get(x, y));
        }
    }
    Ok(argmax_tie_low(&scores))
}

/// Evaluates the stopping rule on a prefix (caller invokes this at block
/// boundaries): for each hypothesis `s`, the lead of its joint
/// log-likelihood over the best rival is compared against
/// `c_s = n (min_{s'} D(w1[s] || w1[s'] | P_s) - eps)`. With a schedule the
/// hypothesis-dependent input terms of message segments enter the scores;
/// without one the input process is treated as hypothesis-independent and
/// those terms cancel.
pub fn stopping_check(
    x_seq: &[usize],
    y1_seq: &[usize],
    fam: &StateChannelFamily,
    policy: &InputPolicy,
    epsilon: f64,
    n: usize,
    schedule: Option<(&Schedule, &Pmf)>,
) -> Result<(bool, usize)> {
    if x_seq.len() != y1_seq.len() {
        return Err(Error::DimensionMismatch {
            what: "stopping-rule sequences",
            expected: x_seq.len(),
            got: y1_seq.len(),
        });
    }
    let states = fam.num_states();
    let mut scores = vec![0.0f64; states];
    for (t, (&x, &y)) in x_seq.iter().zip(y1_seq).enumerate() {
        let message_segment = match schedule {
            Some((sched, _)) => sched.kind_at(t) == SegmentKind::Message,
            None => false,
        };
        for s in 0..states {
            scores[s] += ln_clamped(fam.w1(s).get(x, y));
            if message_segment {
                scores[s] += ln_clamped(policy.input(s).get(x));
            }
        }
    }
    let mut leading = argmax_tie_low(&scores);
    if x_seq.is_empty() {
        return Ok((false, leading));
    }
    let mut stop = false;
    for s in 0..states {
        let mut d = f64::INFINITY;
        for s_prime in 0..states {
            if s_prime != s {
                d = d.min(conditional_kl(fam.w1(s), fam.w1(s_prime), policy.input(s))?);
            }
        }
        let c = n as f64 * (d - epsilon);
        let mut rival = f64::NEG_INFINITY;
        for s2 in 0..states {
            if s2 != s {
                rival = rival.max(scores[s2]);
            }
        }
        if scores[s] - rival >= c {
            stop = true;
            leading = s;
            break;
        }
    }
    Ok((stop, leading))
}

/// Codebooks the eavesdropper needs for exact-mixture detection.
pub struct EveCodebooks {
    /// Per adaptive block, per hypothesized state.
    pub msg: Vec<Vec<Codebook>>,
    /// Per adaptive block: the type-signal word set.
    pub sig: Vec<Vec<Vec<usize>>>,
}

/// Eavesdropper state decision from her observation alone.
///
/// `IidSurrogate` scores each symbol against the per-segment induced output
/// marginal of the hypothesized state; `ExactMixture` scores whole blocks
/// against the uniform mixture over the hypothesized codebook. Returns the
/// estimate and the spread between the best and worst hypothesis scores.
pub fn eve_detect(
    y2_seq: &[usize],
    fam: &StateChannelFamily,
    policy: &InputPolicy,
    p_tilde: &Pmf,
    schedule: &Schedule,
    mode: EveMode,
    codebooks: Option<&EveCodebooks>,
) -> Result<(usize, f64)> {
    let states = fam.num_states();
    let y2_cols = fam.y2_size();
    let mut scores = vec![0.0f64; states];
    match mode {
        EveMode::IidSurrogate => {
            let mut univ_tbl = Vec::with_capacity(states);
            let mut msg_tbl = Vec::with_capacity(states);
            for s in 0..states {
                univ_tbl.push(
                    push_forward(p_tilde, fam.w2(s))?
                        .probs()
                        .iter()
                        .map(|&v| ln_clamped(v))
                        .collect::<Vec<_>>(),
                );
                msg_tbl.push(
                    push_forward(policy.input(s), fam.w2(s))?
                        .probs()
                        .iter()
                        .map(|&v| ln_clamped(v))
                        .collect::<Vec<_>>(),
                );
            }
            for (t, &y) in y2_seq.iter().enumerate() {
                if y >= y2_cols {
                    return Err(Error::RejectedInput("symbol outside alphabet".into()));
                }
                for s in 0..states {
                    scores[s] += match schedule.kind_at(t) {
                        SegmentKind::Message => msg_tbl[s][y],
                        _ => univ_tbl[s][y],
                    };
                }
            }
        }
        EveMode::ExactMixture | EveMode::ExactMixtureMarginal => {
            let books = codebooks.ok_or_else(|| {
                Error::RejectedInput("exact-mixture detection needs codebooks".into())
            })?;
            for cb_per_state in &books.msg {
                for cb in cb_per_state {
                    if cb.capped {
                        return Err(Error::RejectedInput(
                            "exact-mixture detection with a capped-out codebook".into(),
                        ));
                    }
                }
            }
            let ln_w2: Vec<Vec<f64>> = (0..states)
                .map(|s| {
                    (0..fam.input_size() * y2_cols)
                        .map(|i| ln_clamped(fam.w2(s).get(i / y2_cols, i % y2_cols)))
                        .collect()
                })
                .collect();
            let univ_tbl: Vec<Vec<f64>> = (0..states)
                .map(|s| {
                    push_forward(p_tilde, fam.w2(s))
                        .map(|q| q.probs().iter().map(|&v| ln_clamped(v)).collect())
                })
                .collect::<Result<_>>()?;

            let mut adaptive_idx = 0usize;
            let blocks = y2_seq.len() / schedule.block_len;
            for block in 0..blocks {
                let start = block * schedule.block_len;
                let seg = &y2_seq[start..start + schedule.block_len];
                if block < schedule.universal_blocks {
                    for &y in seg {
                        for s in 0..states {
                            scores[s] += univ_tbl[s][y];
                        }
                    }
                } else {
                    let msg_y2 = &seg[..schedule.msg_len];
                    let sig_y2 = &seg[schedule.msg_len..];
                    for s in 0..states {
                        let msg_ll = if mode == EveMode::ExactMixture {
                            let cb = &books.msg[adaptive_idx][s];
                            mixture_block_ll(msg_y2, cb.words(), &ln_w2[s], y2_cols)
                        } else {
                            let per_type: Vec<f64> = (0..states)
                                .map(|t| {
                                    mixture_block_ll(
                                        msg_y2,
                                        books.msg[adaptive_idx][t].words(),
                                        &ln_w2[s],
                                        y2_cols,
                                    )
                                })
                                .collect();
                            log_sum_exp(&per_type) - libm::log(states as f64)
                        };
                        scores[s] += msg_ll;
                        scores[s] += mixture_block_ll(
                            sig_y2,
                            books.sig[adaptive_idx].iter().map(|w| w.as_slice()),
                            &ln_w2[s],
                            y2_cols,
                        );
                    }
                    adaptive_idx += 1;
                }
            }
        }
    }
    let spread = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - scores.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok((argmax_tie_low(&scores), spread))
}

/// Exhaustive maximum-likelihood decode of one message block with known
/// structure key `r1` and one-time pad `r2`; returns the recovered message
/// index.
pub fn decode_small(
    y1_block: &[usize],
    codebook: &Codebook,
    fam: &StateChannelFamily,
    s: usize,
    r1: usize,
    r2: usize,
) -> Result<usize> {
    if y1_block.len() != codebook.block_len {
        return Err(Error::DimensionMismatch {
            what: "decode block length",
            expected: codebook.block_len,
            got: y1_block.len(),
        });
    }
    let cols = fam.y1_size();
    let ln_w1_s: Vec<f64> = (0..fam.input_size() * cols)
        .map(|i| ln_clamped(fam.w1(s).get(i / cols, i % cols)))
        .collect();
    Ok(ml_message(y1_block, codebook, &ln_w1_s, cols, r1, r2))
}

/// Folds traces into a [`SimReport`]; the result is invariant to the order
/// traces are supplied in.
pub fn aggregate(ctx: &SimContext, traces: &[TrialTrace]) -> SimReport {
    let mut acc = ReportAccumulator::new(ctx);
    for t in traces {
        acc.add(t);
    }
    acc.finish()
}

/// Incremental, mergeable report builder for large campaigns.
pub struct ReportAccumulator {
    n: usize,
    true_state: usize,
    block_len: usize,
    max_blocks: usize,
    trials: u64,
    censored: u64,
    d1_wrong: u64,
    d2_wrong: u64,
    tau_sum: u128,
    /// `tau_exceed[k]` counts trials with `tau > (k+1) * block_len`.
    tau_exceed: Vec<u64>,
    rates: Vec<f32>,
    adaptive_blocks: u64,
    correct_type_blocks: u64,
    max_eve_spread: f64,
    decode_blocks: u64,
    decode_failures: u64,
    trials_with_decode_failure: u64,
}

impl ReportAccumulator {
    pub fn new(ctx: &SimContext) -> Self {
        ReportAccumulator {
            n: ctx.cfg.n,
            true_state: ctx.cfg.true_state,
            block_len: ctx.schedule.block_len,
            max_blocks: ctx.schedule.max_blocks,
            trials: 0,
            censored: 0,
            d1_wrong: 0,
            d2_wrong: 0,
            tau_sum: 0,
            tau_exceed: vec![0; ctx.schedule.max_blocks],
            rates: Vec::new(),
            adaptive_blocks: 0,
            correct_type_blocks: 0,
            max_eve_spread: 0.0,
            decode_blocks: 0,
            decode_failures: 0,
            trials_with_decode_failure: 0,
        }
    }

    pub fn add(&mut self, t: &TrialTrace) {
        self.trials += 1;
        if t.censored {
            self.censored += 1;
        } else {
            self.rates.push((t.bits_sent as f64 / self.n as f64) as f32);
        }
        if t.s_hat_tx != self.true_state {
            self.d1_wrong += 1;
        }
        if t.s_hat_eve != self.true_state {
            self.d2_wrong += 1;
        }
        self.tau_sum += t.tau as u128;
        for k in 0..self.max_blocks {
            if t.tau > (k + 1) * self.block_len {
                self.tau_exceed[k] += 1;
            }
        }
        self.adaptive_blocks += t.adaptive_blocks as u64;
        self.correct_type_blocks += t.correct_type_blocks as u64;
        if t.eve_score_spread > self.max_eve_spread {
            self.max_eve_spread = t.eve_score_spread;
        }
        self.decode_blocks += t.decode_blocks as u64;
        self.decode_failures += t.decode_failures as u64;
        if t.decode_failures > 0 {
            self.trials_with_decode_failure += 1;
        }
    }

    pub fn merge(mut self, other: ReportAccumulator) -> ReportAccumulator {
        self.trials += other.trials;
        self.censored += other.censored;
        self.d1_wrong += other.d1_wrong;
        self.d2_wrong += other.d2_wrong;
        self.tau_sum += other.tau_sum;
        for (a, b) in self.tau_exceed.iter_mut().zip(&other.tau_exceed) {
            *a += b;
        }
        self.rates.extend_from_slice(&other.rates);
        self.adaptive_blocks += other.adaptive_blocks;
        self.correct_type_blocks += other.correct_type_blocks;
        self.max_eve_spread = self.max_eve_spread.max(other.max_eve_spread);
        self.decode_blocks += other.decode_blocks;
        self.decode_failures += other.decode_failures;
        self.trials_with_decode_failure += other.trials_with_decode_failure;
        self
    }

    pub fn finish(mut self) -> SimReport {
        let trials = self.trials.max(1) as f64;
        let censored_f = self.censored as f64;
        self.rates
            .sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        // Rates are already bits per channel use.
        let q = |p: f64| -> f64 {
            if self.rates.is_empty() {
                return 0.0;
            }
            let idx = ((self.rates.len() - 1) as f64 * p) as usize;
            f64::from(self.rates[idx])
        };
        let rate_quantiles = [0.1, 0.25, 0.5, 0.75, 0.9]
            .iter()
            .map(|&p| (p, q(p)))
            .collect();
        let tau_tail = self
            .tau_exceed
            .iter()
            .enumerate()
            .map(|(k, &c)| ((k + 1) * self.block_len, c as f64 / trials))
            .collect();
        SimReport {
            n: self.n,
            trials: self.trials,
            censored: self.censored,
            d1_wrong: self.d1_wrong,
            d2_wrong: self.d2_wrong,
            p_d1: (self.d1_wrong as f64 + censored_f).min(trials) / trials,
            p_d2: (self.d2_wrong as f64 + censored_f).min(trials) / trials,
            p_d1_errors_only: self.d1_wrong as f64 / trials,
            p_d2_errors_only: self.d2_wrong as f64 / trials,
            p_censored: censored_f / trials,
            mean_tau: self.tau_sum as f64 / trials,
            tau_tail,
            rate_quantiles,
            correct_estimate_fraction: if self.adaptive_blocks == 0 {
                0.0
            } else {
                self.correct_type_blocks as f64 / self.adaptive_blocks as f64
            },
            max_eve_score_spread: self.max_eve_spread,
            decode_blocks: self.decode_blocks,
            decode_failures: self.decode_failures,
            trials_with_decode_failure: self.trials_with_decode_failure,
        }
    }
}

/// Runs the whole campaign sequentially.
pub fn run_campaign(ctx: &SimContext) -> SimReport {
    let mut acc = ReportAccumulator::new(ctx);
    for trial in 0..ctx.cfg.trials {
        let trace = ctx.run_trial(trial);
        acc.add(&trace);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::empirical_type;
    use crate::sim::codebook::Codebook;

    fn table1_cfg(n: usize, trials: u64) -> SimConfig {
        let fam = StateChannelFamily::table1();
        let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
        SimConfig::new(fam, policy, n, 0, trials, Seed::new(40, 0))
    }

    #[test]
    fn tx_mle_examples() {
        let fam = StateChannelFamily::table1();
        // Single symbol (x=0, y1=1): ln 0.1 vs ln 0.15 favors state 1.
        assert_eq!(tx_mle(&[0], &[1], &fam).unwrap(), 1);
        // And (x=0, y1=0): ln 0.9 vs ln 0.85 favors state 0.
        assert_eq!(tx_mle(&[0], &[0], &fam).unwrap(), 0);
        assert!(tx_mle(&[], &[], &fam).is_err());
        assert!(tx_mle(&[0, 1], &[0], &fam).is_err());
    }

    #[test]
    fn stopping_check_examples() {
        let fam = StateChannelFamily::table1();
        let policy = InputPolicy::uniform(&fam, 0.0).unwrap();

        // Empty prefix never stops.
        let (stop, _) = stopping_check(&[], &[], &fam, &policy, 0.001, 100, None).unwrap();
        assert!(it_is_false(stop));

        // Threshold met with equality stops (>= convention): one symbol
        // with LLR ln(0.9/0.85), epsilon chosen so c_0 equals it exactly.
        let llr = libm::log(0.9) - libm::log(0.85);
        let d = crate::metrics::conditional_kl(fam.w1(0), fam.w1(1), policy.input(0)).unwrap();
        let eps = d - llr; // c_0 = 1 * (d - eps) = llr
        let (stop, leading) = stopping_check(&[0], &[0], &fam, &policy, eps, 1, None).unwrap();
        assert!(stop);
        assert_eq!(leading, 0);

        // Slack above the divergence makes every threshold non-positive:
        // the first checkpoint trips.
        let (stop, _) = stopping_check(&[0], &[1], &fam, &policy, 1.0, 100, None).unwrap();
        assert!(stop);
    }

    fn it_is_false(b: bool) -> bool {
        !b
    }

    #[test]
    fn degenerate_epsilon_stops_at_first_boundary() {
        let mut cfg = table1_cfg(400, 4);
        cfg.epsilon = 1.0; // far above the sensing divergence
        let ctx = SimContext::new(cfg).unwrap();
        assert!(ctx.degenerate_thresholds);
        let n_block = ctx.schedule().block_len;
        for trial in 0..4 {
            let trace = ctx.run_trial(trial);
            assert_eq!(trace.tau, n_block);
            assert!(!trace.censored);
        }
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let cfg = table1_cfg(900, 3);
        let ctx1 = SimContext::new(cfg.clone()).unwrap();
        let ctx2 = SimContext::new(cfg).unwrap();
        for trial in 0..3 {
            assert_eq!(ctx1.run_trial(trial), ctx2.run_trial(trial));
        }
        // Different trials differ.
        assert_ne!(ctx1.run_trial(0), ctx1.run_trial(1));
    }

    #[test]
    fn schedule_conserves_symbols() {
        let mut cfg = table1_cfg(900, 6);
        cfg.epsilon = 0.2 * 0.010896;
        let ctx = SimContext::new(cfg).unwrap();
        for trial in 0..6 {
            let t = ctx.run_trial(trial);
            assert_eq!(
                t.universal_symbols + t.message_symbols + t.signal_symbols,
                t.tau
            );
        }
    }

    #[test]
    fn message_blocks_have_exact_composition() {
        let mut cfg = table1_cfg(400, 4);
        cfg.record_symbols = true;
        cfg.simulate_decoding = true;
        let ctx = SimContext::new(cfg).unwrap();
        let sched = ctx.schedule();
        for trial in 0..4 {
            let t = ctx.run_trial(trial);
            let blocks = t.tau / sched.block_len;
            for b in sched.universal_blocks..blocks {
                let start = b * sched.block_len;
                let msg: Vec<usize> = t.x_seq[start..start + sched.msg_len]
                    .iter()
                    .map(|&v| v as usize)
                    .collect();
                let observed = empirical_type(&msg, 2).unwrap();
                let expected = crate::sim::codebook::round_composition(
                    ctx.config()
                        .policy
                        .input(t.per_block_estimates[b - sched.universal_blocks] as usize),
                    sched.msg_len,
                );
                let expected: Vec<f64> = expected
                    .iter()
                    .map(|&c| c as f64 / sched.msg_len as f64)
                    .collect();
                assert_eq!(observed.probs(), expected.as_slice());
            }
        }
    }

    #[test]
    fn eve_surrogate_llr_is_identically_zero_at_confusion_point() {
        let cfg = table1_cfg(400, 50);
        let ctx = SimContext::new(cfg).unwrap();
        for trial in 0..50 {
            let t = ctx.run_trial(trial);
            assert_eq!(t.eve_score_spread, 0.0, "trial {trial}");
            // Deterministic tie-break lands on state 0.
            assert_eq!(t.s_hat_eve, 0);
        }
    }

    #[test]
    fn aggregate_is_order_invariant() {
        let cfg = table1_cfg(400, 64);
        let ctx = SimContext::new(cfg).unwrap();
        let traces: Vec<TrialTrace> = (0..64).map(|t| ctx.run_trial(t)).collect();
        let mut shuffled = traces.clone();
        shuffled.reverse();
        shuffled.swap(3, 40);
        assert_eq!(aggregate(&ctx, &traces), aggregate(&ctx, &shuffled));
    }

    #[test]
    fn decode_small_noiseless_always_succeeds() {
        let fam = noiseless_friendly_family();
        let words = vec![
            vec![0, 0, 0, 0],
            vec![1, 1, 1, 1],
            vec![0, 1, 0, 1],
            vec![1, 0, 1, 0],
        ];
        let cb = Codebook::from_words(words.clone(), [4, 1, 1], 2).unwrap();
        for m in 0..4 {
            let r2 = 3usize;
            let a = (m + r2) % 4;
            // Near-noiseless receiver channel: y1 = codeword.
            let m_hat = decode_small(&words[a], &cb, &fam, 0, 0, r2).unwrap();
            assert_eq!(m_hat, m);
        }
    }

    fn noiseless_friendly_family() -> StateChannelFamily {
        StateChannelFamily::build(
            vec![
                crate::prob::StochasticKernel::bsc(0.001).unwrap(),
                crate::prob::StochasticKernel::bsc(0.4).unwrap(),
            ],
            vec![
                crate::prob::StochasticKernel::bsc(0.06).unwrap(),
                crate::prob::StochasticKernel::bsc(0.03).unwrap(),
            ],
            crate::family::JointMode::ConditionallyIndependent,
        )
        .unwrap()
    }

    #[test]
    fn decode_small_two_word_reliability() {
        // Complementary 16-symbol words over BSC(0.1): error only with 8+
        // flips, binomial tail below 1e-4.
        let fam = StateChannelFamily::table1();
        let words = vec![vec![0; 16], vec![1; 16]];
        let cb = Codebook::from_words(words.clone(), [2, 1, 1], 2).unwrap();
        let mut rng = Seed::new(71, 0).rng();
        let mut ok = 0u32;
        let trials = 10_000;
        for i in 0..trials {
            let m = (i % 2) as usize;
            let y: Vec<usize> = words[m]
                .iter()
                .map(|&x| if rng.uniform() < 0.1 { 1 - x } else { x })
                .collect();
            if decode_small(&y, &cb, &fam, 0, 0, 0).unwrap() == m {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 0.99, "success {ok}/{trials}");
    }

    #[test]
    fn decode_small_key_mismatch_scrambles() {
        // With a uniformly wrong pad the decoded message is right with
        // probability 1/|m| only.
        let fam = noiseless_friendly_family();
        let mut rng = Seed::new(72, 0).rng();
        let counts = [6usize, 6];
        let words: Vec<Vec<usize>> = (0..4)
            .map(|_| super::super::codebook::constant_composition_word(&counts, &mut rng))
            .collect();
        let cb = Codebook::from_words(words.clone(), [4, 1, 1], 2).unwrap();
        let mut hits = 0u32;
        let trials = 4000;
        for i in 0..trials {
            let m = rng.below(4);
            let r2 = rng.below(4);
            let a = (m + r2) % 4;
            let y: Vec<usize> = words[a]
                .iter()
                .map(|&x| if rng.uniform() < 0.001 { 1 - x } else { x })
                .collect();
            let wrong_r2 = rng.below(4);
            if decode_small(&y, &cb, &fam, 0, 0, wrong_r2).unwrap() == m {
                hits += 1;
            }
            let _ = i;
        }
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.25).abs() <= 0.03, "hit rate {rate}");
    }

    #[test]
    fn eve_exact_single_word_matches_known_input_ml() {
        let fam = StateChannelFamily::table1();
        let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
        let p_tilde = Pmf::uniform(2);
        let sched = Schedule {
            block_len: 4,
            universal_blocks: 0,
            msg_len: 3,
            sig_len: 1,
            max_blocks: 2,
        };
        let word1 = vec![0, 1, 0];
        let word2 = vec![1, 1, 0];
        let sig1 = vec![vec![1], vec![1]];
        let sig2 = vec![vec![0], vec![0]];
        let books = EveCodebooks {
            msg: vec![
                vec![
                    Codebook::from_words(vec![word1.clone()], [1, 1, 1], 2).unwrap(),
                    Codebook::from_words(vec![word1.clone()], [1, 1, 1], 2).unwrap(),
                ],
                vec![
                    Codebook::from_words(vec![word2.clone()], [1, 1, 1], 2).unwrap(),
                    Codebook::from_words(vec![word2.clone()], [1, 1, 1], 2).unwrap(),
                ],
            ],
            sig: vec![sig1, sig2],
        };
        let y2 = vec![0, 1, 0, 1, 1, 1, 0, 0];
        let (est, spread) = eve_detect(
            &y2,
            &fam,
            &policy,
            &p_tilde,
            &sched,
            EveMode::ExactMixture,
            Some(&books),
        )
        .unwrap();

        // Known-input oracle: score each state on the actual words.
        let xs = [word1.as_slice(), &[1][..], word2.as_slice(), &[0][..]].concat();
        let mut scores = [0.0f64; 2];
        for (s, score) in scores.iter_mut().enumerate() {
            for (t, &y) in y2.iter().enumerate() {
                *score += libm::log(fam.w2(s).get(xs[t], y));
            }
        }
        let oracle = if scores[0] >= scores[1] { 0 } else { 1 };
        assert_eq!(est, oracle);
        assert!(((scores[0] - scores[1]).abs() - spread).abs() <= 1e-12);
    }

    #[test]
    fn eve_exact_rejects_capped_codebooks() {
        let fam = StateChannelFamily::table1();
        let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
        let mut cfg = SimConfig::new(fam, policy, 400, 0, 1, Seed::new(1, 1));
        cfg.eve_mode = EveMode::ExactMixture;
        cfg.codebook_cap = 8;
        // Natural sizes at Table-I rates exceed a cap of 8.
        assert!(SimContext::new(cfg).is_err());
    }

    #[test]
    fn censoring_extends_past_n() {
        let mut cfg = table1_cfg(400, 2);
        cfg.epsilon = 0.1 * 0.010896;
        cfg.censor_at = Some(2000);
        let ctx = SimContext::new(cfg).unwrap();
        let sched = ctx.schedule();
        assert!(sched.horizon() >= 1980);
        for trial in 0..2 {
            let t = ctx.run_trial(trial);
            assert!(t.tau <= sched.horizon());
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let fam = StateChannelFamily::table1();
        let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
        let base = SimConfig::new(fam.clone(), policy.clone(), 400, 0, 10, Seed::new(0, 0));

        let mut bad = base.clone();
        bad.trials = 0;
        assert!(SimContext::new(bad).is_err());

        let mut bad = base.clone();
        bad.true_state = 5;
        assert!(SimContext::new(bad).is_err());

        let mut bad = base.clone();
        bad.beta = 0.9;
        assert!(SimContext::new(bad).is_err());

        let mut bad = base.clone();
        bad.delta = 0.0;
        assert!(SimContext::new(bad).is_err());

        let mut bad = base;
        bad.n = 3;
        assert!(SimContext::new(bad).is_err());
    }
}
