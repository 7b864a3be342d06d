//! `sisac reproduce-fig2`: the worked all-BSC example end to end.

use std::path::Path;

use serde::Serialize;
use sisac_core::region::{r1_r2_rkey, sweep_boundary, InputPolicy, SweepSpec};
use sisac_core::{StateChannelFamily, LN_2};

use crate::commands::PointJson;
use crate::config::{FamilyFile, PolicyFile};
use crate::output::{fnum, Csv, OutputSet};
use crate::{CliError, Units};

#[derive(Debug, Serialize)]
struct RegimeCheck {
    state: usize,
    r1_bits: f64,
    r2_bits: f64,
    r_key_bits: f64,
    /// `(R2 - R_key)^+ < R1`.
    lower_ok: bool,
    /// `R1 < R2`.
    upper_ok: bool,
}

#[derive(Debug, Serialize)]
struct ReproduceSummary {
    p_so: PointJson,
    p_sc: PointJson,
    p_co: PointJson,
    regime: Vec<RegimeCheck>,
    regime_holds: bool,
}

pub fn run(out: &Path, units: Units, stamp: bool) -> Result<(), CliError> {
    let fam = StateChannelFamily::table1();
    let spec = SweepSpec::default();
    let sweep = sweep_boundary(&fam, &spec).map_err(CliError::from_core)?;

    // Regime check under the conditionally independent joint.
    let probe = InputPolicy::uniform(&fam, 0.0).map_err(CliError::from_core)?;
    let mut regime = Vec::new();
    let mut regime_holds = true;
    for s in 0..fam.num_states() {
        let rates = r1_r2_rkey(&fam, &probe, s).map_err(CliError::from_core)?;
        let lower_ok = (rates.r2 - rates.r_key).max(0.0) < rates.r1;
        let upper_ok = rates.r1 < rates.r2;
        regime_holds &= lower_ok && upper_ok;
        regime.push(RegimeCheck {
            state: s,
            r1_bits: rates.r1 / LN_2,
            r2_bits: rates.r2 / LN_2,
            r_key_bits: rates.r_key / LN_2,
            lower_ok,
            upper_ok,
        });
    }

    let mut outputs = OutputSet::new(out)?;
    // Emit the example configuration files as a starting point for custom
    // runs of the other subcommands.
    outputs.write_json("family.json", &FamilyFile::table1())?;
    outputs.write_json(
        "policy.json",
        &PolicyFile {
            per_state_inputs: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            rho: 0.0,
        },
    )?;
    outputs.write_text(
        "boundary.csv",
        &crate::commands::region::boundary_csv(&fam, &sweep),
    )?;
    outputs.write_text("segment.csv", &segment_csv(&sweep.segment))?;
    outputs.write_json(
        "operating_points.json",
        &ReproduceSummary {
            p_so: PointJson::from_sweep(&sweep.p_so),
            p_sc: PointJson::from_sweep(&sweep.p_sc),
            p_co: PointJson::from_sweep(&sweep.p_co),
            regime,
            regime_holds,
        },
    )?;
    // The example uses the built-in family, so the manifest hashes nothing.
    outputs.finish("reproduce-fig2", &[], None, stamp)?;

    let scale = |nats: f64| match units {
        Units::Bits => nats / LN_2,
        Units::Nats => nats,
    };
    let unit_name = match units {
        Units::Bits => "bits",
        Units::Nats => "nats",
    };
    println!(
        "regime check ((R2 - R_key)^+ < R1 < R2 for every state): {}",
        if regime_holds { "pass" } else { "FAIL" }
    );
    for (name, pt) in [
        ("P_SO", &sweep.p_so),
        ("P_SC", &sweep.p_sc),
        ("P_CO", &sweep.p_co),
    ] {
        println!(
            "{name}: rate {:.6} {unit_name}, E2 {:.6} nats, rho {:.3}",
            scale(pt.rate),
            pt.e2,
            pt.rho
        );
    }
    Ok(())
}

fn segment_csv(segment: &[sisac_core::region::SweepPoint]) -> String {
    let mut csv = Csv::new(&["rho", "rate_bits", "rate_nats", "e1_nats", "e2_nats"]);
    for pt in segment {
        csv.row(&[
            fnum(pt.rho),
            fnum(pt.rate / LN_2),
            fnum(pt.rate),
            fnum(pt.e1),
            fnum(pt.e2),
        ]);
    }
    csv.into_string()
}
