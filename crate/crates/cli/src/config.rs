//! On-disk JSON schemas and their conversion into library types.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sisac_core::family::{JointMode, StateChannelFamily};
use sisac_core::prob::{Pmf, Seed, StochasticKernel};
use sisac_core::region::{InputPolicy, SoftCoveringOptions, SweepSpec};
use sisac_core::sim::{EveMode, SimConfig};

use crate::CliError;

/// Channel family file: per-state kernels as row-major probability
/// matrices, plus the joint specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub states: usize,
    pub w1: Vec<Vec<Vec<f64>>>,
    pub w2: Vec<Vec<Vec<f64>>>,
    pub joint: JointSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointSpec {
    Mode(String),
    Explicit(Vec<Vec<Vec<f64>>>),
}

impl FamilyFile {
    pub fn table1() -> Self {
        FamilyFile {
            states: 2,
            w1: vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.85, 0.15], vec![0.15, 0.85]],
            ],
            w2: vec![
                vec![vec![0.94, 0.06], vec![0.06, 0.94]],
                vec![vec![0.97, 0.03], vec![0.03, 0.97]],
            ],
            joint: JointSpec::Mode("independent".into()),
        }
    }

    pub fn build(&self) -> Result<StateChannelFamily, CliError> {
        if self.w1.len() != self.states || self.w2.len() != self.states {
            return Err(CliError::parse(format!(
                "family file declares {} states but carries {} w1 / {} w2 kernels",
                self.states,
                self.w1.len(),
                self.w2.len()
            )));
        }
        let kernels =
            |raw: &[Vec<Vec<f64>>], name: &str| -> Result<Vec<StochasticKernel>, CliError> {
                raw.iter()
                    .enumerate()
                    .map(|(s, rows)| {
                        StochasticKernel::from_rows(rows.clone())
                            .map_err(|e| CliError::parse(format!("family field {name}[{s}]: {e}")))
                    })
                    .collect()
            };
        let w1 = kernels(&self.w1, "w1")?;
        let w2 = kernels(&self.w2, "w2")?;
        let joint = match &self.joint {
            JointSpec::Mode(mode) if mode == "independent" => JointMode::ConditionallyIndependent,
            JointSpec::Mode(other) => {
                return Err(CliError::parse(format!(
                    "family field joint: unknown mode {other:?} (expected \"independent\" or explicit kernels)"
                )))
            }
            JointSpec::Explicit(raw) => JointMode::Explicit(kernels(raw, "joint")?),
        };
        StateChannelFamily::build(w1, w2, joint).map_err(CliError::from_core)
    }
}

/// Input-policy file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyFile {
    pub per_state_inputs: Vec<Vec<f64>>,
    pub rho: f64,
}

impl PolicyFile {
    pub fn build(&self) -> Result<InputPolicy, CliError> {
        let inputs = self
            .per_state_inputs
            .iter()
            .enumerate()
            .map(|(s, raw)| {
                Pmf::new(raw.clone()).map_err(|e| {
                    CliError::parse(format!("policy field per_state_inputs[{s}]: {e}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        InputPolicy::new(inputs, self.rho).map_err(CliError::from_core)
    }
}

/// Region-sweep file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFile {
    /// Lattice resolution per state simplex (binary input: resolution + 1
    /// grid values).
    pub input_grid_resolution: usize,
    /// Number of rho grid values in [0, 1].
    pub rho_grid_points: usize,
    /// Optional fixed soft-covering rate in nats.
    #[serde(default)]
    pub esc_rate_override_nats: Option<f64>,
}

impl SweepFile {
    pub fn build(&self) -> Result<SweepSpec, CliError> {
        if self.rho_grid_points == 0 {
            return Err(CliError::parse(
                "sweep field rho_grid_points: empty grid".into(),
            ));
        }
        Ok(SweepSpec {
            input_resolution: self.input_grid_resolution,
            rho_intervals: self.rho_grid_points - 1,
            esc_rate_override: self.esc_rate_override_nats,
            sc_opts: SoftCoveringOptions::default(),
        })
    }
}

/// Simulation campaign file. `n_grid`, when present, runs one campaign per
/// horizon and fits the detection exponents across them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimFile {
    pub n: usize,
    pub trials: u64,
    pub true_state: usize,
    pub seed_master: u64,
    #[serde(default)]
    pub seed_stream: u64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub epsilon_nats: f64,
    #[serde(default = "default_cap")]
    pub codebook_cap: usize,
    #[serde(default = "default_eve_mode")]
    pub eve_mode: EveMode,
    #[serde(default)]
    pub censor_at: Option<usize>,
    /// Censoring horizon as a multiple of `n` (overrides `censor_at`;
    /// the right knob for `n_grid` campaigns).
    #[serde(default)]
    pub censor_factor: Option<f64>,
    #[serde(default)]
    pub simulate_decoding: bool,
    #[serde(default)]
    pub rates_override_nats: Option<[f64; 3]>,
    #[serde(default)]
    pub p_tilde: Option<Vec<f64>>,
    #[serde(default)]
    pub record_symbols: bool,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
}

fn default_beta() -> f64 {
    0.25
}

fn default_delta() -> f64 {
    0.1
}

fn default_cap() -> usize {
    4096
}

fn default_eve_mode() -> EveMode {
    EveMode::IidSurrogate
}

impl SimFile {
    pub fn build(
        &self,
        family: StateChannelFamily,
        policy: InputPolicy,
        seed_override: Option<u64>,
        n: usize,
    ) -> Result<SimConfig, CliError> {
        if self.trials == 0 {
            return Err(CliError::parse("sim field trials: must be positive".into()));
        }
        let mut cfg = SimConfig::new(
            family,
            policy,
            n,
            self.true_state,
            self.trials,
            Seed::new(seed_override.unwrap_or(self.seed_master), self.seed_stream),
        );
        cfg.beta = self.beta;
        cfg.delta = self.delta;
        cfg.epsilon = self.epsilon_nats;
        cfg.codebook_cap = self.codebook_cap;
        cfg.eve_mode = self.eve_mode;
        cfg.censor_at = match self.censor_factor {
            Some(f) => {
                if f.is_nan() || f < 1.0 {
                    return Err(CliError::parse(
                        "sim field censor_factor: must be at least 1".into(),
                    ));
                }
                Some((f * n as f64).ceil() as usize)
            }
            None => self.censor_at,
        };
        cfg.simulate_decoding = self.simulate_decoding;
        cfg.rates_override = self.rates_override_nats;
        cfg.record_symbols = self.record_symbols;
        cfg.record_blocks = false;
        if let Some(raw) = &self.p_tilde {
            cfg.p_tilde = Some(
                Pmf::new(raw.clone())
                    .map_err(|e| CliError::parse(format!("sim field p_tilde: {e}")))?,
            );
        }
        Ok(cfg)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::parse(format!("parsing {}: {e}", path.display())))
}
