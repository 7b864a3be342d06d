//! `sisac metrics`: the per-state rate/exponent table.

use std::path::Path;

use serde::Serialize;
use sisac_core::region::{
    e1_bound, e2_bound, r1_r2_rkey, resolvability_membership, SoftCoveringOptions,
};
use sisac_core::LN_2;

use crate::config::{read_json, FamilyFile, PolicyFile};
use crate::output::OutputSet;
use crate::CliError;

#[derive(Debug, Serialize)]
struct StateMetrics {
    state: usize,
    r1_nats: f64,
    r1_bits: f64,
    r2_nats: f64,
    r2_bits: f64,
    r_key_nats: f64,
    r_key_bits: f64,
    e1_nats: f64,
    e2_nats: f64,
    /// Soft-covering exponents toward each alternative state, with the
    /// rates they were evaluated at.
    soft_covering: Vec<SoftCoveringEntry>,
    resolvable: Vec<(usize, bool)>,
}

#[derive(Debug, Serialize)]
struct SoftCoveringEntry {
    versus: usize,
    e_sc_nats: f64,
    rate_nats: f64,
    mixture_chernoff_nats: f64,
}

#[derive(Debug, Serialize)]
struct MetricsJson {
    per_state: Vec<StateMetrics>,
    rate_bound_nats: f64,
    rate_bound_bits: f64,
    e1_nats: f64,
    e2_nats: f64,
}

pub fn run(
    family_path: &Path,
    policy_path: &Path,
    out: Option<&Path>,
    stamp: bool,
) -> Result<(), CliError> {
    let family_file: FamilyFile = read_json(family_path)?;
    let policy_file: PolicyFile = read_json(policy_path)?;
    let fam = family_file.build()?;
    let policy = policy_file.build()?;
    policy.validate_for(&fam).map_err(CliError::from_core)?;

    let opts = SoftCoveringOptions::default();
    let (e2_overall, e2_detail) =
        e2_bound(&fam, &policy, None, &opts).map_err(CliError::from_core)?;
    let (rate_overall, _) =
        sisac_core::region::rate_bound(&fam, &policy).map_err(CliError::from_core)?;

    let mut per_state = Vec::new();
    let mut e1_overall = f64::INFINITY;
    for s in 0..fam.num_states() {
        let rates = r1_r2_rkey(&fam, &policy, s).map_err(CliError::from_core)?;
        let e1 = e1_bound(&fam, &policy, s).map_err(CliError::from_core)?;
        e1_overall = e1_overall.min(e1);
        let mut soft_covering = Vec::new();
        let mut resolvable = Vec::new();
        for s_prime in 0..fam.num_states() {
            if s_prime == s {
                continue;
            }
            let detail = resolvability_membership(&fam, &policy, s, s_prime, None, &opts)
                .map_err(CliError::from_core)?;
            let own = detail
                .soft_covering
                .iter()
                .find(|(s2, _, _)| *s2 == s)
                .copied()
                .unwrap_or((s, 0.0, 0.0));
            soft_covering.push(SoftCoveringEntry {
                versus: s_prime,
                e_sc_nats: own.1,
                rate_nats: own.2,
                mixture_chernoff_nats: detail.mixture_chernoff,
            });
            resolvable.push((s_prime, detail.member));
        }
        per_state.push(StateMetrics {
            state: s,
            r1_nats: rates.r1,
            r1_bits: rates.r1 / LN_2,
            r2_nats: rates.r2,
            r2_bits: rates.r2 / LN_2,
            r_key_nats: rates.r_key,
            r_key_bits: rates.r_key / LN_2,
            e1_nats: e1,
            e2_nats: e2_detail[s].value,
            soft_covering,
            resolvable,
        });
    }

    println!("state  quantity   nats          bits");
    for m in &per_state {
        println!(
            "{:<6} R1        {:>12.6}  {:>12.6}",
            m.state, m.r1_nats, m.r1_bits
        );
        println!(
            "{:<6} R2        {:>12.6}  {:>12.6}",
            m.state, m.r2_nats, m.r2_bits
        );
        println!(
            "{:<6} R_key     {:>12.6}  {:>12.6}",
            m.state, m.r_key_nats, m.r_key_bits
        );
        println!(
            "{:<6} E1        {:>12.6}  {:>12.6}",
            m.state,
            m.e1_nats,
            m.e1_nats / LN_2
        );
        println!(
            "{:<6} E2        {:>12.6}  {:>12.6}",
            m.state,
            m.e2_nats,
            m.e2_nats / LN_2
        );
        for sc in &m.soft_covering {
            println!(
                "{:<6} E_SC(vs {}) {:>11.6}  {:>12.6}   at rate {:.6} nats",
                m.state,
                sc.versus,
                sc.e_sc_nats,
                sc.e_sc_nats / LN_2,
                sc.rate_nats
            );
        }
    }
    println!(
        "overall rate bound {:.6} bits ({:.6} nats), E1 {:.6} nats, E2 {:.6} nats",
        rate_overall / LN_2,
        rate_overall,
        e1_overall,
        e2_overall
    );

    if let Some(prefix) = out {
        let mut outputs = OutputSet::new(prefix)?;
        outputs.write_json(
            "metrics.json",
            &MetricsJson {
                per_state,
                rate_bound_nats: rate_overall,
                rate_bound_bits: rate_overall / LN_2,
                e1_nats: e1_overall,
                e2_nats: e2_overall,
            },
        )?;
        outputs.finish("metrics", &[family_path, policy_path], None, stamp)?;
    }
    Ok(())
}
