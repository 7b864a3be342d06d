//! `sisac region`: grid sweep of the achievable region.

use std::path::Path;

use serde::Serialize;
use sisac_core::region::{sweep_boundary, SweepResult};
use sisac_core::{StateChannelFamily, LN_2};

use crate::commands::{region_label, PointJson};
use crate::config::{read_json, FamilyFile, SweepFile};
use crate::output::{fnum, Csv, OutputSet};
use crate::{CliError, Units};

#[derive(Debug, Serialize)]
struct RegionSummary {
    p_so: PointJson,
    p_sc: PointJson,
    p_co: PointJson,
    segment: Vec<PointJson>,
    points_total: usize,
    frontier_size: usize,
}

pub fn run(
    family_path: &Path,
    sweep_path: &Path,
    out: &Path,
    units: Units,
    stamp: bool,
) -> Result<(), CliError> {
    let family_file: FamilyFile = read_json(family_path)?;
    let sweep_file: SweepFile = read_json(sweep_path)?;
    let fam = family_file.build()?;
    let spec = sweep_file.build()?;
    let sweep = sweep_boundary(&fam, &spec).map_err(CliError::from_core)?;

    let mut outputs = OutputSet::new(out)?;
    outputs.write_text("boundary.csv", &boundary_csv(&fam, &sweep))?;
    outputs.write_json(
        "summary.json",
        &RegionSummary {
            p_so: PointJson::from_sweep(&sweep.p_so),
            p_sc: PointJson::from_sweep(&sweep.p_sc),
            p_co: PointJson::from_sweep(&sweep.p_co),
            segment: sweep.segment.iter().map(PointJson::from_sweep).collect(),
            points_total: sweep.points.len(),
            frontier_size: sweep.pareto.len(),
        },
    )?;
    outputs.finish("region", &[family_path, sweep_path], None, stamp)?;

    let scale = |nats: f64| match units {
        Units::Bits => nats / LN_2,
        Units::Nats => nats,
    };
    let unit_name = match units {
        Units::Bits => "bits",
        Units::Nats => "nats",
    };
    println!(
        "swept {} points; frontier {} points",
        sweep.points.len(),
        sweep.pareto.len()
    );
    for (name, pt) in [
        ("P_SO", &sweep.p_so),
        ("P_SC", &sweep.p_sc),
        ("P_CO", &sweep.p_co),
    ] {
        println!(
            "{name}: rate {:.6} {unit_name}, E1 {:.6} nats, E2 {:.6} nats, rho {:.3}",
            scale(pt.rate),
            pt.e1,
            pt.e2,
            pt.rho
        );
    }
    Ok(())
}

pub fn boundary_csv(fam: &StateChannelFamily, sweep: &SweepResult) -> String {
    let mut header: Vec<String> = Vec::new();
    for s in 0..fam.num_states() {
        for x in 0..fam.input_size() {
            header.push(format!("p_s{s}_x{x}"));
        }
    }
    header.extend(
        [
            "rho",
            "rate_bits",
            "rate_nats",
            "e1_nats",
            "e2_nats",
            "resolvable",
            "on_frontier",
            "region",
        ]
        .map(String::from),
    );
    for s in 0..fam.num_states() {
        header.push(format!("rate_s{s}_nats"));
        header.push(format!("e1_s{s}_nats"));
        header.push(format!("e2_s{s}_nats"));
        header.push(format!("member_s{s}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);

    let frontier: std::collections::BTreeSet<usize> = sweep.pareto.iter().copied().collect();
    for (idx, pt) in sweep.points.iter().enumerate() {
        let mut cells = Vec::with_capacity(header.len());
        for p in &pt.inputs {
            for &v in p.probs() {
                cells.push(fnum(v));
            }
        }
        cells.push(fnum(pt.rho));
        cells.push(fnum(pt.rate / LN_2));
        cells.push(fnum(pt.rate));
        cells.push(fnum(pt.e1));
        cells.push(fnum(pt.e2));
        cells.push(pt.resolvable.to_string());
        cells.push(frontier.contains(&idx).to_string());
        cells.push(region_label(pt).to_string());
        for sd in &pt.per_state {
            cells.push(fnum(sd.rate_bound));
            cells.push(fnum(sd.e1));
            cells.push(fnum(sd.e2));
            cells.push(sd.member.to_string());
        }
        csv.row(&cells);
    }
    csv.into_string()
}
