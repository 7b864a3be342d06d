pub mod metrics;
pub mod region;
pub mod reproduce;
pub mod simulate;

use serde::Serialize;
use sisac_core::region::SweepPoint;
use sisac_core::LN_2;

/// JSON shape of one operating point.
#[derive(Debug, Serialize)]
pub struct PointJson {
    pub inputs: Vec<Vec<f64>>,
    pub rho: f64,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub e1_nats: f64,
    pub e2_nats: f64,
    pub resolvable: bool,
}

impl PointJson {
    pub fn from_sweep(pt: &SweepPoint) -> Self {
        PointJson {
            inputs: pt.inputs.iter().map(|p| p.probs().to_vec()).collect(),
            rho: pt.rho,
            rate_bits: pt.rate / LN_2,
            rate_nats: pt.rate,
            e1_nats: pt.e1,
            e2_nats: pt.e2,
            resolvable: pt.resolvable,
        }
    }
}

/// Region of the trade-off plane a sweep point belongs to: `I` for the
/// zero-Eve-exponent confusion branch, `II` for the resolvable branch,
/// `III` for the structure-leaking branch.
pub fn region_label(pt: &SweepPoint) -> &'static str {
    if pt.e2 <= 1e-12 {
        "I"
    } else if pt.resolvable {
        "II"
    } else {
        "III"
    }
}
