//! Monte Carlo simulator of the sequential block-adaptive policy.

pub mod codebook;
pub mod leakage;
pub mod stats;

mod trial;

pub use codebook::{build_codebook, constant_composition_word, round_composition, Codebook};
pub use leakage::{estimate_leakage, LeakageReport, TinyLeakageConfig};
pub use stats::{estimate_exponents, stopping_tail, ExponentFit, ExponentSample, TailReport};
pub use trial::{
    aggregate, decode_small, eve_detect, run_campaign, stopping_check, tx_mle, EveCodebooks,
    EveMode, ReportAccumulator, Schedule, SegmentKind, SimConfig, SimContext, SimReport,
    TrialTrace,
};
