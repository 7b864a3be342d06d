//! Achievable (secrecy rate, Tx sensing exponent, Eve sensing exponent)
//! region evaluation.
//!
//! For a channel family and a per-state input policy with time-sharing
//! weight `rho`, this module computes the per-state rate triple
//! `(R1, R2, R_key)`, the transmitter detection-exponent bound `E1`, the
//! eavesdropper detection-exponent bound `E2` with its resolvability
//! indicator, the soft-covering exponent that gates resolvability, and
//! grid sweeps that trace the trade-off boundary with its labeled
//! operating points.
//!
//! All rates and exponents are in nats (per channel use).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::StateChannelFamily;
use crate::metrics::{
    chernoff, conditional_chernoff, conditional_kl, key_rate, mutual_information,
};
use crate::prob::{push_forward, Pmf, Seed, StochasticKernel};
use crate::CMP_TOLERANCE;

/// Per-state input distributions plus the time-sharing weight between the
/// key-only scheme (`rho = 1`) and the resolvability-coded scheme
/// (`rho = 0`).
#[derive(Debug, Clone)]
pub struct InputPolicy {
    per_state_inputs: Vec<Pmf>,
    rho: f64,
}

impl InputPolicy {
    pub fn new(per_state_inputs: Vec<Pmf>, rho: f64) -> Result<Self> {
        if per_state_inputs.is_empty() {
            return Err(Error::RejectedInput(
                "policy needs one input per state".into(),
            ));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::RejectedInput("rho outside [0, 1]".into()));
        }
        let n = per_state_inputs[0].alphabet_size();
        if per_state_inputs.iter().any(|p| p.alphabet_size() != n) {
            return Err(Error::DimensionMismatch {
                what: "policy input alphabets",
                expected: n,
                got: 0,
            });
        }
        Ok(InputPolicy {
            per_state_inputs,
            rho,
        })
    }

    /// The same input distribution for every state.
    pub fn common(input: Pmf, num_states: usize, rho: f64) -> Result<Self> {
        InputPolicy::new(vec![input; num_states], rho)
    }

    pub fn uniform(fam: &StateChannelFamily, rho: f64) -> Result<Self> {
        InputPolicy::common(Pmf::uniform(fam.input_size()), fam.num_states(), rho)
    }

    pub fn input(&self, s: usize) -> &Pmf {
        &self.per_state_inputs[s]
    }

    pub fn inputs(&self) -> &[Pmf] {
        &self.per_state_inputs
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        InputPolicy::new(self.per_state_inputs.clone(), rho)
    }

    /// Checks compatibility with a family (state count, input alphabet).
    pub fn validate_for(&self, fam: &StateChannelFamily) -> Result<()> {
        self.check(fam)
    }

    fn check(&self, fam: &StateChannelFamily) -> Result<()> {
        if self.per_state_inputs.len() != fam.num_states() {
            return Err(Error::DimensionMismatch {
                what: "policy state count",
                expected: fam.num_states(),
                got: self.per_state_inputs.len(),
            });
        }
        if self.per_state_inputs[0].alphabet_size() != fam.input_size() {
            return Err(Error::DimensionMismatch {
                what: "policy input alphabet",
                expected: fam.input_size(),
                got: self.per_state_inputs[0].alphabet_size(),
            });
        }
        Ok(())
    }
}

/// `(R1, R2, R_key)` under one state's input distribution, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates {
    pub r1: f64,
    pub r2: f64,
    pub r_key: f64,
}

/// Rates of one state: `R1 = I(P_s; w1[s])`, `R2 = I(P_s; w2[s])`,
/// `R_key = H(Y1 | X, Y2)` under the joint law.
pub fn r1_r2_rkey(fam: &StateChannelFamily, policy: &InputPolicy, s: usize) -> Result<StateRates> {
    policy.check(fam)?;
    let p = policy.input(s);
    Ok(StateRates {
        r1: mutual_information(p, fam.w1(s))?,
        r2: mutual_information(p, fam.w2(s))?,
        r_key: key_rate(p, fam.w_joint(s), fam.y2_size())?,
    })
}

/// Transmitter exponent bound for state `s`:
/// `min_{s' != s} D(w1[s] || w1[s'] | P_s)`.
pub fn e1_bound(fam: &StateChannelFamily, policy: &InputPolicy, s: usize) -> Result<f64> {
    policy.check(fam)?;
    let mut best = f64::INFINITY;
    for s_prime in 0..fam.num_states() {
        if s_prime != s {
            best = best.min(conditional_kl(fam.w1(s), fam.w1(s_prime), policy.input(s))?);
        }
    }
    Ok(best)
}

/// Result of the soft-covering minimization.
#[derive(Debug, Clone)]
pub struct SoftCoveringResult {
    pub value: f64,
    pub minimizing_kernel: StochasticKernel,
    pub rate_used: f64,
}

/// Solver knobs for the soft-covering minimization.
#[derive(Debug, Clone)]
pub struct SoftCoveringOptions {
    /// Total number of starts; the first two are the analytic candidates
    /// `Q = W` and `Q = constant at p∘W`, the rest are random.
    pub starts: usize,
    /// Stop a descent once the objective improves by less than this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SoftCoveringOptions {
    fn default() -> Self {
        SoftCoveringOptions {
            starts: 16,
            tol: 1e-10,
            max_iters: 4000,
        }
    }
}

/// Soft-covering exponent at codebook rate `rate` (nats/use):
///
/// `E_SC(p, w, R) = min_Q { D(pQ || pW) + (1/2)[R - I(p; Q)]^+ }`
///
/// over row-stochastic `Q`, where `I(p; Q) = D(pQ || p x Q_Y)` with
/// `Q_Y = p∘Q`. Solved by multi-start projected gradient descent on the
/// product of row simplices; `Q = W` certifies the `(1/2)[R - I(p; W)]^+`
/// upper bound, and the exponent is zero whenever `R <= I(p; W)`.
pub fn soft_covering_exponent(
    p: &Pmf,
    w: &StochasticKernel,
    rate: f64,
    opts: &SoftCoveringOptions,
) -> Result<SoftCoveringResult> {
    if rate < 0.0 {
        return Err(Error::RejectedInput("negative soft-covering rate".into()));
    }
    if p.alphabet_size() != w.rows() {
        return Err(Error::DimensionMismatch {
            what: "soft covering input",
            expected: w.rows(),
            got: p.alphabet_size(),
        });
    }
    for x in 0..w.rows() {
        for y in 0..w.cols() {
            if w.get(x, y) <= 0.0 {
                return Err(Error::RejectedInput(
                    "soft covering requires an all-positive channel".into(),
                ));
            }
        }
    }

    let rows = w.rows();
    let cols = w.cols();
    let w_rows: Vec<Vec<f64>> = (0..rows).map(|x| w.row(x).to_vec()).collect();
    let marginal = push_forward(p, w)?;
    let const_rows: Vec<Vec<f64>> = (0..rows).map(|_| marginal.probs().to_vec()).collect();

    let mut rng = Seed::new(0x50f7_c0e5, 0).rng();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for start_idx in 0..opts.starts.max(2) {
        let mut q: Vec<Vec<f64>> = match start_idx {
            0 => w_rows.clone(),
            1 => const_rows.clone(),
            _ => (0..rows)
                .map(|_| {
                    let raw: Vec<f64> = (0..cols).map(|_| rng.uniform() + 1e-3).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.iter().map(|v| v / sum).collect()
                })
                .collect(),
        };
        let value = descend(p, w, rate, &mut q, opts);
        if best.as_ref().map_or(true, |(bv, _)| value < *bv) {
            best = Some((value, q));
        }
    }
    let (value, q) = best.expect("at least one start");
    Ok(SoftCoveringResult {
        value: value.max(0.0),
        minimizing_kernel: StochasticKernel::from_rows(q)?,
        rate_used: rate,
    })
}

fn sc_objective(p: &Pmf, w: &StochasticKernel, rate: f64, q: &[Vec<f64>]) -> f64 {
    let cols = w.cols();
    let mut q_y = vec![0.0; cols];
    for x in 0..w.rows() {
        let px = p.get(x);
        for y in 0..cols {
            q_y[y] += px * q[x][y];
        }
    }
    let mut d = 0.0; // D(pQ || pW)
    let mut mi = 0.0; // I(p; Q)
    for x in 0..w.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        for y in 0..cols {
            let qv = q[x][y];
            if qv > 0.0 {
                d += px * qv * libm::log(qv / w.get(x, y));
                if q_y[y] > 0.0 {
                    mi += px * qv * libm::log(qv / q_y[y]);
                }
            }
        }
    }
    d + 0.5 * (rate - mi).max(0.0)
}

fn descend(
    p: &Pmf,
    w: &StochasticKernel,
    rate: f64,
    q: &mut Vec<Vec<f64>>,
    opts: &SoftCoveringOptions,
) -> f64 {
    let rows = w.rows();
    let cols = w.cols();
    let mut value = sc_objective(p, w, rate, q);
    for _ in 0..opts.max_iters {
        // Marginal and active branch of the hinge.
        let mut q_y = vec![0.0; cols];
        for x in 0..rows {
            for y in 0..cols {
                q_y[y] += p.get(x) * q[x][y];
            }
        }
        let mut mi = 0.0;
        for x in 0..rows {
            let px = p.get(x);
            if px == 0.0 {
                continue;
            }
            for y in 0..cols {
                let qv = q[x][y];
                if qv > 0.0 && q_y[y] > 0.0 {
                    mi += px * qv * libm::log(qv / q_y[y]);
                }
            }
        }
        let hinge_active = mi < rate;

        let mut grad = vec![vec![0.0; cols]; rows];
        let mut grad_norm = 0.0;
        for x in 0..rows {
            let px = p.get(x);
            if px == 0.0 {
                continue;
            }
            for y in 0..cols {
                let qv = q[x][y].max(1e-12);
                let mut g = px * (libm::log(qv / w.get(x, y)) + 1.0);
                if hinge_active {
                    g -= 0.5 * px * libm::log(qv / q_y[y].max(1e-12));
                }
                grad[x][y] = g;
                grad_norm += g * g;
            }
        }
        if grad_norm <= 0.0 {
            break;
        }

        // Backtracking projected line search.
        let mut step = 0.5;
        let mut improved = false;
        while step > 1e-14 {
            let mut candidate = Vec::with_capacity(rows);
            for x in 0..rows {
                let moved: Vec<f64> = (0..cols).map(|y| q[x][y] - step * grad[x][y]).collect();
                candidate.push(project_to_simplex(&moved));
            }
            let cand_value = sc_objective(p, w, rate, &candidate);
            if cand_value < value - 1e-16 {
                let gain = value - cand_value;
                *q = candidate;
                value = cand_value;
                improved = true;
                if gain < opts.tol {
                    return value;
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    value
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        for o in &mut out {
            *o /= sum;
        }
    } else {
        let u = 1.0 / n as f64;
        for o in &mut out {
            *o = u;
        }
    }
    out
}

/// Decision record of a pairwise resolvability test.
#[derive(Debug, Clone)]
pub struct MembershipDetail {
    pub member: bool,
    /// First condition: `R1(s) - R2(s) + R_key(s) >= 0` (enough message
    /// plus key randomness to cover Eve's observation rate).
    pub rate_condition: bool,
    /// Chernoff information between the induced single-letter output
    /// distributions at Eve, `C(P_s ∘ w2[s] || P_s' ∘ w2[s'])`.
    pub mixture_chernoff: f64,
    /// Soft-covering exponents `(s'', E_SC, rate used)` for both endpoints.
    pub soft_covering: Vec<(usize, f64, f64)>,
}

/// The codebook rate used for the soft-covering exponent of state `s`:
/// the full randomness budget `R1(s) + R_key(s)` of the block construction,
/// unless overridden.
fn esc_rate(rates: &StateRates, over: Option<f64>) -> f64 {
    over.unwrap_or((rates.r1 + rates.r_key).max(0.0))
}

/// Tests whether the pair `(P_s, P_s')` lies in the resolvability region:
/// the rate condition holds at `s` and Eve's single-letter mixture Chernoff
/// information is strictly below both soft-covering exponents.
pub fn resolvability_membership(
    fam: &StateChannelFamily,
    policy: &InputPolicy,
    s: usize,
    s_prime: usize,
    esc_rate_override: Option<f64>,
    sc_opts: &SoftCoveringOptions,
) -> Result<MembershipDetail> {
    policy.check(fam)?;
    let rates_s = r1_r2_rkey(fam, policy, s)?;
    let rate_condition = rates_s.r1 - rates_s.r2 + rates_s.r_key >= -CMP_TOLERANCE;

    let out_s = push_forward(policy.input(s), fam.w2(s))?;
    let out_sp = push_forward(policy.input(s_prime), fam.w2(s_prime))?;
    let (mixture_chernoff, _) = chernoff(&out_s, &out_sp)?;

    let mut soft_covering = Vec::with_capacity(2);
    let mut min_esc = f64::INFINITY;
    for &s2 in &[s, s_prime] {
        let rates = if s2 == s {
            rates_s
        } else {
            r1_r2_rkey(fam, policy, s2)?
        };
        let rate = esc_rate(&rates, esc_rate_override);
        let esc = soft_covering_exponent(policy.input(s2), fam.w2(s2), rate, sc_opts)?;
        min_esc = min_esc.min(esc.value);
        soft_covering.push((s2, esc.value, rate));
    }

    Ok(MembershipDetail {
        member: rate_condition && mixture_chernoff < min_esc,
        rate_condition,
        mixture_chernoff,
        soft_covering,
    })
}

/// Eve-exponent detail for one ordered state pair.
#[derive(Debug, Clone)]
pub struct PairE2 {
    pub s_prime: usize,
    pub member: bool,
    pub conditional_chernoff: f64,
    pub mixture_chernoff: f64,
    /// `rho * conditional + (1 - rho) * mixture` when the pair is
    /// resolvable, otherwise the conditional Chernoff information alone.
    pub value: f64,
}

/// Eve-exponent detail for one true state: the minimum over alternatives.
#[derive(Debug, Clone)]
pub struct StateE2 {
    pub s: usize,
    pub value: f64,
    pub pairs: Vec<PairE2>,
}

/// Eve detection-exponent bound with per-state and per-pair detail.
pub fn e2_bound(
    fam: &StateChannelFamily,
    policy: &InputPolicy,
    esc_rate_override: Option<f64>,
    sc_opts: &SoftCoveringOptions,
) -> Result<(f64, Vec<StateE2>)> {
    policy.check(fam)?;
    let rho = policy.rho();
    let mut per_state = Vec::with_capacity(fam.num_states());
    let mut overall = f64::INFINITY;
    for s in 0..fam.num_states() {
        let mut pairs = Vec::new();
        let mut state_min = f64::INFINITY;
        for s_prime in 0..fam.num_states() {
            if s_prime == s {
                continue;
            }
            let membership =
                resolvability_membership(fam, policy, s, s_prime, esc_rate_override, sc_opts)?;
            let cond = conditional_chernoff(fam.w2(s), fam.w2(s_prime), policy.input(s))?;
            let value = if membership.member {
                rho * cond + (1.0 - rho) * membership.mixture_chernoff
            } else {
                cond
            };
            state_min = state_min.min(value);
            pairs.push(PairE2 {
                s_prime,
                member: membership.member,
                conditional_chernoff: cond,
                mixture_chernoff: membership.mixture_chernoff,
                value,
            });
        }
        overall = overall.min(state_min);
        per_state.push(StateE2 {
            s,
            value: state_min,
            pairs,
        });
    }
    Ok((overall, per_state))
}

/// Secrecy-rate bound: per state
/// `min(rho R_key + (1 - rho) [R1 - R2 + R_key]^+, R1)`, overall minimum
/// across states.
pub fn rate_bound(fam: &StateChannelFamily, policy: &InputPolicy) -> Result<(f64, Vec<f64>)> {
    policy.check(fam)?;
    let rho = policy.rho();
    let mut per_state = Vec::with_capacity(fam.num_states());
    let mut overall = f64::INFINITY;
    for s in 0..fam.num_states() {
        let rates = r1_r2_rkey(fam, policy, s)?;
        let mixed = rho * rates.r_key + (1.0 - rho) * (rates.r1 - rates.r2 + rates.r_key).max(0.0);
        let bound = mixed.min(rates.r1);
        per_state.push(bound);
        overall = overall.min(bound);
    }
    Ok((overall, per_state))
}

/// Everything known about one state at one operating point.
#[derive(Debug, Clone)]
pub struct StateDetail {
    pub s: usize,
    pub rates: StateRates,
    pub rate_bound: f64,
    pub e1: f64,
    pub e2: StateE2,
    /// Pairwise resolvability verdicts `(s', member)`.
    pub resolvable: Vec<(usize, bool)>,
}

/// One achievable tuple with its per-state breakdown.
#[derive(Debug, Clone)]
pub struct RegionPoint {
    pub rate: f64,
    pub e1: f64,
    pub e2: f64,
    pub per_state: Vec<StateDetail>,
}

/// Assembles the full achievable tuple for `(family, policy)`.
pub fn region_point(
    fam: &StateChannelFamily,
    policy: &InputPolicy,
    esc_rate_override: Option<f64>,
    sc_opts: &SoftCoveringOptions,
) -> Result<RegionPoint> {
    let (rate, rate_per_state) = rate_bound(fam, policy)?;
    let (e2, e2_per_state) = e2_bound(fam, policy, esc_rate_override, sc_opts)?;
    let mut e1 = f64::INFINITY;
    let mut per_state = Vec::with_capacity(fam.num_states());
    for (s, e2_detail) in e2_per_state.into_iter().enumerate() {
        let e1_s = e1_bound(fam, policy, s)?;
        e1 = e1.min(e1_s);
        let resolvable = e2_detail
            .pairs
            .iter()
            .map(|pair| (pair.s_prime, pair.member))
            .collect();
        per_state.push(StateDetail {
            s,
            rates: r1_r2_rkey(fam, policy, s)?,
            rate_bound: rate_per_state[s],
            e1: e1_s,
            e2: e2_detail,
            resolvable,
        });
    }
    Ok(RegionPoint {
        rate,
        e1,
        e2,
        per_state,
    })
}

/// Sweep configuration: a simplex lattice per state times a `rho` grid.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Lattice resolution per state (a binary input gets `resolution + 1`
    /// grid points).
    pub input_resolution: usize,
    /// Number of `rho` intervals (`rho_intervals + 1` grid values).
    pub rho_intervals: usize,
    /// Optional fixed rate (nats) for every soft-covering evaluation.
    pub esc_rate_override: Option<f64>,
    pub sc_opts: SoftCoveringOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            input_resolution: 50,
            rho_intervals: 20,
            esc_rate_override: None,
            sc_opts: SoftCoveringOptions::default(),
        }
    }
}

/// Per-state summary of one sweep cell.
#[derive(Debug, Clone, Copy)]
pub struct SweepStateDetail {
    pub rate_bound: f64,
    pub e1: f64,
    pub e2: f64,
    /// Every ordered pair `(s, s')` with this state as the true one is
    /// resolvable.
    pub member: bool,
}

/// One evaluated sweep cell.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub inputs: Vec<Pmf>,
    pub rho: f64,
    pub rate: f64,
    pub e1: f64,
    pub e2: f64,
    /// True when every ordered state pair is resolvable.
    pub resolvable: bool,
    pub per_state: Vec<SweepStateDetail>,
}

/// Sweep output: all cells, the Pareto-frontier indices per `E1` slice,
/// the labeled operating points, and the explicit time-sharing segment.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub pareto: Vec<usize>,
    pub p_so: SweepPoint,
    pub p_sc: SweepPoint,
    pub p_co: SweepPoint,
    pub segment: Vec<SweepPoint>,
}

struct StateGridEval {
    input: Pmf,
    rates: StateRates,
    rate_condition: bool,
    e1: f64,
    /// `C(w2[s] || w2[s'] | P_s)` for each alternative state.
    cond_chernoff: Vec<f64>,
    /// `D(w1[s] || w1[s'] | P_s)` minimum is `e1`; kept per pair for detail.
    esc: f64,
    out2: Pmf,
}

/// Evaluates the region over the grid and labels the operating points:
/// `P_SO` is the max-rate point among minimal-`E2` points, `P_SC` the
/// max-rate resolvable point, and `P_CO` the max-rate point on the
/// `rho = 1` branch. Ties prefer smaller `E2`, then smaller `rho`, then
/// the earlier grid point.
pub fn sweep_boundary(fam: &StateChannelFamily, spec: &SweepSpec) -> Result<SweepResult> {
    let states = fam.num_states();

    // Per-state, per-grid-value caches; every quantity except the mixture
    // Chernoff depends on a single state's input only.
    let grid_points = simplex_lattice(fam.input_size(), spec.input_resolution);
    let mut cache: Vec<Vec<StateGridEval>> = Vec::with_capacity(states);
    for s in 0..states {
        let mut per_point = Vec::with_capacity(grid_points.len());
        for coords in &grid_points {
            let input = Pmf::new(coords.clone())?;
            let probe = InputPolicy::common(input.clone(), states, 0.0)?;
            let rates = r1_r2_rkey(fam, &probe, s)?;
            let mut cond_chernoff = vec![0.0; states];
            let mut e1 = f64::INFINITY;
            for s_prime in 0..states {
                if s_prime == s {
                    continue;
                }
                cond_chernoff[s_prime] = conditional_chernoff(fam.w2(s), fam.w2(s_prime), &input)?;
                e1 = e1.min(conditional_kl(fam.w1(s), fam.w1(s_prime), &input)?);
            }
            let esc_rate_s = esc_rate(&rates, spec.esc_rate_override);
            let esc = soft_covering_exponent(&input, fam.w2(s), esc_rate_s, &spec.sc_opts)?.value;
            per_point.push(StateGridEval {
                out2: push_forward(&input, fam.w2(s))?,
                rate_condition: rates.r1 - rates.r2 + rates.r_key >= -CMP_TOLERANCE,
                e1,
                cond_chernoff,
                esc,
                rates,
                input,
            });
        }
        cache.push(per_point);
    }

    let rho_values: Vec<f64> = (0..=spec.rho_intervals)
        .map(|i| i as f64 / spec.rho_intervals.max(1) as f64)
        .collect();

    let mut points = Vec::new();
    let mut assignment = vec![0usize; states];
    loop {
        // Pairwise quantities for this policy cell.
        let mut member = vec![vec![false; states]; states];
        let mut mix = vec![vec![0.0f64; states]; states];
        for s in 0..states {
            for s_prime in 0..states {
                if s == s_prime {
                    continue;
                }
                let a = &cache[s][assignment[s]];
                let b = &cache[s_prime][assignment[s_prime]];
                let (c_mix, _) = chernoff(&a.out2, &b.out2)?;
                mix[s][s_prime] = c_mix;
                member[s][s_prime] = a.rate_condition && c_mix < a.esc.min(b.esc);
            }
        }
        let resolvable =
            (0..states).all(|s| (0..states).all(|s_prime| s == s_prime || member[s][s_prime]));
        let e1 = (0..states)
            .map(|s| cache[s][assignment[s]].e1)
            .fold(f64::INFINITY, f64::min);

        for &rho in &rho_values {
            let mut rate = f64::INFINITY;
            let mut e2 = f64::INFINITY;
            let mut per_state = Vec::with_capacity(states);
            for s in 0..states {
                let eval = &cache[s][assignment[s]];
                let plus = (eval.rates.r1 - eval.rates.r2 + eval.rates.r_key).max(0.0);
                let bound = (rho * eval.rates.r_key + (1.0 - rho) * plus).min(eval.rates.r1);
                rate = rate.min(bound);
                let mut state_e2 = f64::INFINITY;
                let mut state_member = true;
                for s_prime in 0..states {
                    if s_prime == s {
                        continue;
                    }
                    let value = if member[s][s_prime] {
                        rho * eval.cond_chernoff[s_prime] + (1.0 - rho) * mix[s][s_prime]
                    } else {
                        eval.cond_chernoff[s_prime]
                    };
                    state_e2 = state_e2.min(value);
                    state_member &= member[s][s_prime];
                }
                e2 = e2.min(state_e2);
                per_state.push(SweepStateDetail {
                    rate_bound: bound,
                    e1: eval.e1,
                    e2: state_e2,
                    member: state_member,
                });
            }
            points.push(SweepPoint {
                inputs: (0..states)
                    .map(|s| cache[s][assignment[s]].input.clone())
                    .collect(),
                rho,
                rate,
                e1,
                e2,
                resolvable,
                per_state,
            });
        }

        if !advance_assignment(&mut assignment, grid_points.len()) {
            break;
        }
    }

    let pareto = pareto_indices(&points);

    // P_SO: best rate among E2-minimal points.
    let min_e2 = points.iter().map(|pt| pt.e2).fold(f64::INFINITY, f64::min);
    let p_so = points
        .iter()
        .filter(|pt| pt.e2 <= min_e2 + CMP_TOLERANCE)
        .cloned()
        .max_by(cmp_rate_then_security)
        .ok_or_else(|| Error::RejectedInput("empty sweep grid".into()))?;

    // P_CO: best rate on the rho = 1 (all-key, open-loop) branch; without
    // rho = 1 in the grid, the best rate overall.
    let p_co = points
        .iter()
        .filter(|pt| pt.rho == 1.0)
        .cloned()
        .max_by(cmp_rate_then_security)
        .unwrap_or_else(|| {
            points
                .iter()
                .cloned()
                .max_by(cmp_rate_then_security)
                .expect("grid is never empty")
        });

    // P_SC: best rate among fully resolvable policies; falls back to P_SO
    // when nothing is resolvable.
    let p_sc = points
        .iter()
        .filter(|pt| pt.resolvable)
        .cloned()
        .max_by(cmp_rate_then_security)
        .unwrap_or_else(|| p_so.clone());

    // Explicit time-sharing segment between P_SC and P_CO. When both share
    // the same input tuple the segment is the exact rho sweep; otherwise it
    // is the chord between the two operating points.
    let segment = if same_inputs(&p_sc, &p_co) {
        let policy_inputs = p_sc.inputs.clone();
        let steps = 10;
        let mut seg = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let rho = p_sc.rho + t * (p_co.rho - p_sc.rho);
            let policy = InputPolicy::new(policy_inputs.clone(), rho)?;
            let point = region_point(fam, &policy, spec.esc_rate_override, &spec.sc_opts)?;
            seg.push(SweepPoint {
                inputs: policy_inputs.clone(),
                rho,
                rate: point.rate,
                e1: point.e1,
                e2: point.e2,
                resolvable: point
                    .per_state
                    .iter()
                    .all(|sd| sd.resolvable.iter().all(|&(_, m)| m)),
                per_state: point
                    .per_state
                    .iter()
                    .map(|sd| SweepStateDetail {
                        rate_bound: sd.rate_bound,
                        e1: sd.e1,
                        e2: sd.e2.value,
                        member: sd.resolvable.iter().all(|&(_, m)| m),
                    })
                    .collect(),
            });
        }
        seg
    } else {
        let steps = 10;
        (0..=steps)
            .map(|i| {
                let t = i as f64 / steps as f64;
                SweepPoint {
                    inputs: p_sc.inputs.clone(),
                    rho: p_sc.rho + t * (p_co.rho - p_sc.rho),
                    rate: (1.0 - t) * p_sc.rate + t * p_co.rate,
                    e1: p_sc.e1.min(p_co.e1),
                    e2: (1.0 - t) * p_sc.e2 + t * p_co.e2,
                    resolvable: false,
                    per_state: Vec::new(),
                }
            })
            .collect()
    };

    Ok(SweepResult {
        points,
        pareto,
        p_so,
        p_sc,
        p_co,
        segment,
    })
}

fn cmp_rate_then_security(a: &SweepPoint, b: &SweepPoint) -> core::cmp::Ordering {
    // max_by keeps the later of equal elements; order so that preferred
    // points compare greater: higher rate, then lower e2, then lower rho.
    a.rate
        .partial_cmp(&b.rate)
        .unwrap()
        .then(b.e2.partial_cmp(&a.e2).unwrap())
        .then(b.rho.partial_cmp(&a.rho).unwrap())
}

fn same_inputs(a: &SweepPoint, b: &SweepPoint) -> bool {
    a.inputs.len() == b.inputs.len()
        && a.inputs
            .iter()
            .zip(&b.inputs)
            .all(|(x, y)| x.probs() == y.probs())
}

/// Non-dominated points under (maximize rate, minimize e2), grouped by
/// matching `e1` (rounded to 1e-9).
fn pareto_indices(points: &[SweepPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let a = &points[i];
        let b = &points[j];
        quantize(a.e1)
            .cmp(&quantize(b.e1))
            .then(b.rate.partial_cmp(&a.rate).unwrap())
            .then(a.e2.partial_cmp(&b.e2).unwrap())
    });
    let mut keep = Vec::new();
    let mut current_slice = i64::MIN;
    let mut best_e2 = f64::INFINITY;
    for idx in order {
        let pt = &points[idx];
        let slice = quantize(pt.e1);
        if slice != current_slice {
            current_slice = slice;
            best_e2 = f64::INFINITY;
        }
        if pt.e2 < best_e2 - 1e-15 {
            best_e2 = pt.e2;
            keep.push(idx);
        }
    }
    keep.sort_unstable();
    keep
}

fn quantize(v: f64) -> i64 {
    libm::round(v * 1e9) as i64
}

/// All lattice points `k / resolution` on the `(n-1)`-simplex; resolution
/// zero degenerates to the uniform point alone.
fn simplex_lattice(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    if resolution == 0 {
        return vec![vec![1.0 / n as f64; n]];
    }
    let mut out = Vec::new();
    let mut composition = vec![0usize; n];
    composition[0] = resolution;
    loop {
        out.push(
            composition
                .iter()
                .map(|&k| k as f64 / resolution as f64)
                .collect(),
        );
        if !crate::family::next_composition(&mut composition) {
            break;
        }
    }
    out
}

fn advance_assignment(assignment: &mut [usize], base: usize) -> bool {
    for slot in assignment.iter_mut() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}
