//! Statistical behavior of the sequential simulator at moderate scale.

use sisac_core::family::{JointMode, StateChannelFamily};
use sisac_core::prob::{Pmf, Seed, StochasticKernel};
use sisac_core::region::InputPolicy;
use sisac_core::sim::{
    aggregate, run_campaign, stopping_tail, tx_mle, EveMode, SimConfig, SimContext,
};

fn well_separated_family() -> StateChannelFamily {
    StateChannelFamily::build(
        vec![
            StochasticKernel::bsc(0.01).unwrap(),
            StochasticKernel::bsc(0.49).unwrap(),
        ],
        vec![
            StochasticKernel::bsc(0.06).unwrap(),
            StochasticKernel::bsc(0.03).unwrap(),
        ],
        JointMode::ConditionallyIndependent,
    )
    .unwrap()
}

#[test]
fn huge_separation_stops_fast_and_detects() {
    let fam = well_separated_family();
    let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
    // Expected crossing time is n (1 - eps / D): with slack close to the
    // large per-symbol divergence the threshold sits a couple of blocks in,
    // and each symbol carries enough evidence to cross it immediately.
    let d = sisac_core::metrics::conditional_kl(fam.w1(0), fam.w1(1), &Pmf::uniform(2)).unwrap();
    let mut cfg = SimConfig::new(fam, policy, 2500, 0, 1000, Seed::new(2024, 0));
    cfg.epsilon = 0.98 * d;
    let ctx = SimContext::new(cfg).unwrap();
    let report = run_campaign(&ctx);

    let block = ctx.schedule().block_len;
    assert!(report.p_censored == 0.0);
    assert!(
        report.mean_tau <= (4 * block) as f64,
        "mean tau {}",
        report.mean_tau
    );
    // Estimates the state correctly in at least 99% of trials.
    assert!(
        report.p_d1_errors_only <= 0.01,
        "tx error rate {}",
        report.p_d1_errors_only
    );
}

#[test]
fn long_sequence_mle_is_reliable() {
    // Sequences of length 1e4 under the true state: the estimator-transient
    // tail bound makes errors vanishingly rare.
    let fam = StateChannelFamily::table1();
    let p = Pmf::uniform(2);
    let mut errors = 0u32;
    let trials = 1000u64;
    for trial in 0..trials {
        let mut rng = Seed::new(31, trial).rng();
        let mut xs = Vec::with_capacity(10_000);
        let mut ys = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let x = p.sample(&mut rng);
            let y = if rng.uniform() < fam.w1(0).get(x, 1 - x) {
                1 - x
            } else {
                x
            };
            xs.push(x);
            ys.push(y);
        }
        if tx_mle(&xs, &ys, &fam).unwrap() != 0 {
            errors += 1;
        }
    }
    assert!(errors <= 1, "{errors} errors in {trials} trials");
}

#[test]
fn stopping_tail_stays_below_concentration_bound() {
    // Table-I configuration at n = 2500 with eps = 0.2 D: the martingale
    // bound is loose at this scale but must still dominate the empirical
    // tail, which must decay strictly once stopping mass appears.
    let fam = StateChannelFamily::table1();
    let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
    let d01 = 0.010896061645137331;
    let mut cfg = SimConfig::new(fam, policy, 2500, 0, 1000, Seed::new(90, 0));
    cfg.epsilon = 0.2 * d01;
    cfg.censor_at = Some(5000);
    cfg.record_blocks = false;
    let ctx = SimContext::new(cfg).unwrap();
    let report = run_campaign(&ctx);
    let tail = stopping_tail(&ctx, &report).unwrap();

    assert!(tail.psi > 0.0);
    assert!(tail.c0 > 0.0);
    assert!(tail.within_azuma, "empirical tail exceeded 3x the bound");
    assert!(tail.strictly_decreasing, "log-tail not strictly decreasing");

    // Deterministic immediate stop: the tail vanishes from the first
    // checkpoint on.
    let fam = StateChannelFamily::table1();
    let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
    let mut cfg = SimConfig::new(fam, policy, 400, 0, 50, Seed::new(91, 0));
    cfg.epsilon = 1.0;
    let ctx = SimContext::new(cfg).unwrap();
    let report = run_campaign(&ctx);
    assert!(report.tau_tail.iter().all(|&(_, p)| p == 0.0));
}

#[test]
fn estimate_consistency_improves_with_horizon() {
    // The share of adaptive blocks typed with the true state trends upward
    // with the horizon, matching the exponential estimator transient.
    let fam = StateChannelFamily::table1();
    let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
    let mut fractions = Vec::new();
    for &n in &[400usize, 900, 1600, 2500] {
        let mut cfg = SimConfig::new(fam.clone(), policy.clone(), n, 0, 300, Seed::new(92, 0));
        cfg.epsilon = 0.2 * 0.010896;
        cfg.record_blocks = false;
        let ctx = SimContext::new(cfg).unwrap();
        let report = run_campaign(&ctx);
        fractions.push(report.correct_estimate_fraction);
    }
    for w in fractions.windows(2) {
        assert!(
            w[1] >= w[0] - 0.02,
            "consistency trend broken: {fractions:?}"
        );
    }
    assert!(fractions[fractions.len() - 1] > fractions[0]);
    assert!(*fractions.last().unwrap() >= 0.9);
}

#[test]
fn eve_exact_mixture_beats_surrogate_off_confusion() {
    // Open-loop common input away from the confusion point: codebook
    // structure helps Eve, so exact-mixture scoring must outperform the
    // single-letter surrogate.
    let fam = StateChannelFamily::table1();
    let input = Pmf::new(vec![0.8, 0.2]).unwrap();
    let policy = InputPolicy::common(input.clone(), 2, 1.0).unwrap();

    let mut total_exact = 0u64;
    let mut total_iid = 0u64;
    let trials = 600u64;
    for state in 0..2 {
        let mut cfg = SimConfig::new(
            fam.clone(),
            policy.clone(),
            900,
            state,
            trials,
            Seed::new(93, state as u64),
        );
        cfg.epsilon = 0.2 * 0.010896;
        cfg.p_tilde = Some(input.clone());
        cfg.rates_override = Some([0.09, 0.0, 0.0]); // 16 words at most
        cfg.record_blocks = false;

        let mut exact_cfg = cfg.clone();
        exact_cfg.eve_mode = EveMode::ExactMixture;
        let ctx = SimContext::new(cfg).unwrap();
        let ctx_exact = SimContext::new(exact_cfg).unwrap();
        let report = run_campaign(&ctx);
        let report_exact = run_campaign(&ctx_exact);
        total_iid += report.d2_wrong;
        total_exact += report_exact.d2_wrong;
    }
    assert!(
        total_exact < total_iid,
        "exact {total_exact} vs surrogate {total_iid}"
    );
}

#[test]
fn eve_trajectory_conditioning_vs_marginalization_agree_at_tiny_scale() {
    // With distinct per-state types, Eve can either condition each
    // hypothesis on the trajectory having locked onto it or marginalize
    // the codeword type uniformly. Conditioning exploits the (almost
    // always correct) lock-on, so it can only help; the marginal variant
    // must still beat guessing.
    let fam = StateChannelFamily::table1();
    let inputs = vec![
        Pmf::new(vec![0.7, 0.3]).unwrap(),
        Pmf::new(vec![0.3, 0.7]).unwrap(),
    ];
    let policy = InputPolicy::new(inputs, 0.0).unwrap();
    let mut errors = [0u64; 2];
    for (mode_idx, mode) in [EveMode::ExactMixture, EveMode::ExactMixtureMarginal]
        .into_iter()
        .enumerate()
    {
        for state in 0..2usize {
            let mut cfg = SimConfig::new(
                fam.clone(),
                policy.clone(),
                400,
                state,
                200,
                Seed::new(95, state as u64),
            );
            cfg.epsilon = 0.05 * 0.010896;
            cfg.censor_at = Some(1200);
            cfg.eve_mode = mode;
            cfg.rates_override = Some([0.08, 0.0, 0.0]);
            cfg.record_blocks = false;
            let ctx = SimContext::new(cfg).unwrap();
            let report = run_campaign(&ctx);
            errors[mode_idx] += report.d2_wrong;
        }
    }
    let p = [errors[0] as f64 / 400.0, errors[1] as f64 / 400.0];
    assert!(
        p[0] <= p[1] + 0.05,
        "conditioning should not lose: conditioned {} vs marginalized {}",
        p[0],
        p[1]
    );
    assert!(
        p[1] < 0.48,
        "marginal detector no better than guessing: {}",
        p[1]
    );
}

#[test]
fn decode_path_mostly_succeeds_at_modest_rates() {
    let fam = StateChannelFamily::table1();
    let policy = InputPolicy::uniform(&fam, 0.0).unwrap();
    let mut cfg = SimConfig::new(fam, policy, 900, 0, 60, Seed::new(94, 0));
    cfg.epsilon = 0.2 * 0.010896;
    cfg.simulate_decoding = true;
    cfg.rates_override = Some([0.08, 0.04, 0.04]);
    let ctx = SimContext::new(cfg).unwrap();
    let traces: Vec<_> = (0..60).map(|t| ctx.run_trial(t)).collect();
    let report = aggregate(&ctx, &traces);
    assert!(report.decode_blocks > 0);
    let failure_rate = report.decode_failures as f64 / report.decode_blocks as f64;
    assert!(
        failure_rate <= 0.2,
        "block decode failure rate {failure_rate}"
    );
}
