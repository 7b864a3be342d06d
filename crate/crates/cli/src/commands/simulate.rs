//! `sisac simulate`: seeded Monte Carlo campaigns with optional horizon
//! grids and exponent fits.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sisac_core::prob::Seed;
use sisac_core::sim::{
    estimate_exponents, stopping_tail, ExponentFit, ExponentSample, ReportAccumulator, SimContext,
    SimReport, TailReport, TrialTrace,
};
use sisac_core::LN_2;

use crate::config::{read_json, FamilyFile, PolicyFile, SimFile};
use crate::output::{fnum, Csv, OutputSet};
use crate::{CliError, Units};

#[derive(Debug, Serialize)]
struct CampaignJson {
    config: serde_json::Value,
    per_n: Vec<PerHorizon>,
    exponent_d1: Option<ExponentFit>,
    exponent_d1_errors_only: Option<ExponentFit>,
    exponent_d2: Option<ExponentFit>,
}

#[derive(Debug, Serialize)]
struct PerHorizon {
    n: usize,
    report: SimReport,
    tail: TailReport,
}

pub fn run(
    sim_path: &Path,
    family_path: &Path,
    policy_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    units: Units,
    stamp: bool,
) -> Result<(), CliError> {
    let sim_file: SimFile = read_json(sim_path)?;
    let family_file: FamilyFile = read_json(family_path)?;
    let policy_file: PolicyFile = read_json(policy_path)?;

    let horizons: Vec<usize> = sim_file.n_grid.clone().unwrap_or_else(|| vec![sim_file.n]);
    if horizons.is_empty() {
        return Err(CliError::parse("sim field n_grid: empty grid".into()));
    }

    let mut outputs = OutputSet::new(out)?;
    let mut per_n = Vec::with_capacity(horizons.len());
    for &n in &horizons {
        let fam = family_file.build()?;
        let policy = policy_file.build()?;
        let cfg = sim_file.build(fam, policy, seed_override, n)?;
        let trials = cfg.trials;
        let ctx = SimContext::new(cfg).map_err(CliError::from_core)?;

        let traces: Vec<TrialTrace> = (0..trials)
            .into_par_iter()
            .map(|t| ctx.run_trial(t))
            .collect();
        let mut acc = ReportAccumulator::new(&ctx);
        for t in &traces {
            acc.add(t);
        }
        let report = acc.finish();
        let tail = stopping_tail(&ctx, &report).map_err(CliError::from_core)?;

        let suffix = if horizons.len() == 1 {
            "trials.csv".to_string()
        } else {
            format!("trials_n{n}.csv")
        };
        outputs.write_text(&suffix, &trials_csv(&traces))?;
        if sim_file.record_symbols {
            let suffix = if horizons.len() == 1 {
                "symbols.csv".to_string()
            } else {
                format!("symbols_n{n}.csv")
            };
            outputs.write_text(&suffix, &symbols_csv(&traces))?;
        }
        per_n.push(PerHorizon { n, report, tail });
    }

    let samples = |pick: &dyn Fn(&SimReport) -> f64| -> Vec<ExponentSample> {
        per_n
            .iter()
            .map(|h| ExponentSample {
                n: h.n,
                trials: h.report.trials,
                p_hat: pick(&h.report),
            })
            .collect()
    };
    let fit_seed = Seed::new(sim_file.seed_master, sim_file.seed_stream ^ 0x0b00_75fa);
    let fit = |pick: &dyn Fn(&SimReport) -> f64| -> Option<ExponentFit> {
        if per_n.len() < 2 {
            return None;
        }
        estimate_exponents(&samples(pick), 1000, fit_seed).ok()
    };
    let exponent_d1 = fit(&|r| r.p_d1);
    let exponent_d1_errors_only = fit(&|r| r.p_d1_errors_only);
    let exponent_d2 = fit(&|r| r.p_d2);

    let campaign = CampaignJson {
        config: serde_json::json!({
            "sim": sim_file,
            "family": family_file,
            "policy": policy_file,
            "seed_override": seed_override,
        }),
        per_n,
        exponent_d1,
        exponent_d1_errors_only,
        exponent_d2,
    };
    outputs.write_json("report.json", &campaign)?;
    outputs.finish(
        "simulate",
        &[sim_path, family_path, policy_path],
        Some((
            seed_override.unwrap_or(sim_file.seed_master),
            sim_file.seed_stream,
        )),
        stamp,
    )?;

    for h in &campaign.per_n {
        let r = &h.report;
        let rate_scale = match units {
            Units::Bits => 1.0,
            Units::Nats => LN_2,
        };
        let median = r
            .rate_quantiles
            .iter()
            .find(|(q, _)| (*q - 0.5).abs() < 1e-9)
            .map(|(_, v)| v * rate_scale)
            .unwrap_or(0.0);
        println!(
            "n={}: trials {}, P_d1 {:.6}, P_d2 {:.6}, censored {:.6}, mean tau {:.1}, median rate {:.4}",
            h.n, r.trials, r.p_d1, r.p_d2, r.p_censored, r.mean_tau, median
        );
    }
    if let Some(fit) = &campaign.exponent_d1 {
        println!(
            "E_d1 slope {:.6} nats/use (95% CI [{:.6}, {:.6}], estimable {})",
            fit.slope, fit.ci_low, fit.ci_high, fit.estimable
        );
    }
    if let Some(fit) = &campaign.exponent_d2 {
        println!(
            "E_d2 slope {:.6} nats/use (95% CI [{:.6}, {:.6}], estimable {})",
            fit.slope, fit.ci_low, fit.ci_high, fit.estimable
        );
    }
    Ok(())
}

fn symbols_csv(traces: &[TrialTrace]) -> String {
    let mut csv = Csv::new(&["trial_id", "t", "x", "y1", "y2"]);
    for trace in traces {
        for (t, ((&x, &y1), &y2)) in trace
            .x_seq
            .iter()
            .zip(&trace.y1_seq)
            .zip(&trace.y2_seq)
            .enumerate()
        {
            csv.row(&[
                trace.trial_id.to_string(),
                t.to_string(),
                x.to_string(),
                y1.to_string(),
                y2.to_string(),
            ]);
        }
    }
    csv.into_string()
}

fn trials_csv(traces: &[TrialTrace]) -> String {
    let mut csv = Csv::new(&[
        "trial_id",
        "tau",
        "censored",
        "stop_state",
        "s_hat_tx",
        "s_hat_eve",
        "bits_sent",
        "adaptive_blocks",
        "correct_type_blocks",
        "decode_blocks",
        "decode_failures",
        "eve_score_spread",
    ]);
    for t in traces {
        csv.row(&[
            t.trial_id.to_string(),
            t.tau.to_string(),
            t.censored.to_string(),
            t.stop_state.to_string(),
            t.s_hat_tx.to_string(),
            t.s_hat_eve.to_string(),
            t.bits_sent.to_string(),
            t.adaptive_blocks.to_string(),
            t.correct_type_blocks.to_string(),
            t.decode_blocks.to_string(),
            t.decode_failures.to_string(),
            fnum(t.eve_score_spread),
        ]);
    }
    csv.into_string()
}
