//! State-indexed channel families.
//!
//! A family bundles, for every environmental state `s`, the receiver channel
//! `w1[s] : X -> Y1`, the eavesdropper channel `w2[s] : X -> Y2`, and the
//! joint channel `w_joint[s] : X -> Y1 x Y2` (flattened `y1 * |Y2| + y2`).
//! The feedback signal is the one-tap-delayed receiver output, so it needs
//! no kernel of its own.
//!
//! Construction enforces the distinguishability assumptions: for every pair
//! of distinct states and every input, the per-row KL divergence between the
//! two receiver channels (and between the two eavesdropper channels) is
//! strictly positive and finite.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::conditional_kl;
use crate::prob::{Pmf, StochasticKernel};

const MARGINAL_TOLERANCE: f64 = 1e-10;

/// How the per-state joint channel is specified.
#[derive(Debug, Clone)]
pub enum JointMode {
    /// `w_joint[s](y1, y2 | x) = w1[s](y1|x) * w2[s](y2|x)`.
    ConditionallyIndependent,
    /// Explicit joint kernels, one per state; marginals must match.
    Explicit(Vec<StochasticKernel>),
}

/// A validated state-dependent channel model.
#[derive(Debug, Clone)]
pub struct StateChannelFamily {
    w1: Vec<StochasticKernel>,
    w2: Vec<StochasticKernel>,
    w_joint: Vec<StochasticKernel>,
    input_size: usize,
    y1_size: usize,
    y2_size: usize,
}

impl StateChannelFamily {
    /// Builds and validates a family from per-state kernels.
    pub fn build(
        w1: Vec<StochasticKernel>,
        w2: Vec<StochasticKernel>,
        joint_mode: JointMode,
    ) -> Result<Self> {
        if w1.len() < 2 {
            return Err(Error::RejectedInput(
                "a family needs at least two states".into(),
            ));
        }
        if w1.len() != w2.len() {
            return Err(Error::DimensionMismatch {
                what: "state count",
                expected: w1.len(),
                got: w2.len(),
            });
        }
        let input_size = w1[0].rows();
        let y1_size = w1[0].cols();
        let y2_size = w2[0].cols();
        for k in &w1 {
            if k.rows() != input_size || k.cols() != y1_size {
                return Err(Error::DimensionMismatch {
                    what: "w1 kernel shape",
                    expected: input_size * y1_size,
                    got: k.rows() * k.cols(),
                });
            }
        }
        for k in &w2 {
            if k.rows() != input_size || k.cols() != y2_size {
                return Err(Error::DimensionMismatch {
                    what: "w2 kernel shape",
                    expected: input_size * y2_size,
                    got: k.rows() * k.cols(),
                });
            }
        }

        let w_joint = match joint_mode {
            JointMode::ConditionallyIndependent => w1
                .iter()
                .zip(&w2)
                .map(|(a, b)| independent_joint(a, b))
                .collect::<Result<Vec<_>>>()?,
            JointMode::Explicit(joints) => {
                if joints.len() != w1.len() {
                    return Err(Error::DimensionMismatch {
                        what: "joint kernel count",
                        expected: w1.len(),
                        got: joints.len(),
                    });
                }
                for (s, j) in joints.iter().enumerate() {
                    if j.rows() != input_size || j.cols() != y1_size * y2_size {
                        return Err(Error::DimensionMismatch {
                            what: "joint kernel shape",
                            expected: input_size * y1_size * y2_size,
                            got: j.rows() * j.cols(),
                        });
                    }
                    check_marginal(&j.marginalize_second(y2_size)?, &w1[s], "Y1")?;
                    check_marginal(&j.marginalize_first(y2_size)?, &w2[s], "Y2")?;
                }
                joints
            }
        };

        let fam = StateChannelFamily {
            w1,
            w2,
            w_joint,
            input_size,
            y1_size,
            y2_size,
        };
        fam.check_distinguishability()?;
        Ok(fam)
    }

    /// Two-state all-BSC example family: receiver crossovers 0.1 / 0.15 and
    /// eavesdropper crossovers 0.06 / 0.03, conditionally independent joint.
    pub fn table1() -> Self {
        StateChannelFamily::build(
            vec![
                StochasticKernel::bsc(0.1).unwrap(),
                StochasticKernel::bsc(0.15).unwrap(),
            ],
            vec![
                StochasticKernel::bsc(0.06).unwrap(),
                StochasticKernel::bsc(0.03).unwrap(),
            ],
            JointMode::ConditionallyIndependent,
        )
        .expect("preset family is valid")
    }

    fn check_distinguishability(&self) -> Result<()> {
        for s in 0..self.num_states() {
            for s_prime in 0..self.num_states() {
                if s == s_prime {
                    continue;
                }
                for x in 0..self.input_size {
                    for (which, a, b) in [
                        ("w1", &self.w1[s], &self.w1[s_prime]),
                        ("w2", &self.w2[s], &self.w2[s_prime]),
                    ] {
                        let d = crate::metrics::kl(&a.row_pmf(x), &b.row_pmf(x))?;
                        if d <= 0.0 {
                            return Err(Error::DegenerateModel {
                                s,
                                s_prime,
                                x,
                                detail: if which == "w1" {
                                    "receiver channels identical at this input"
                                } else {
                                    "eavesdropper channels identical at this input"
                                },
                            });
                        }
                        if d.is_infinite() {
                            return Err(Error::DegenerateModel {
                                s,
                                s_prime,
                                x,
                                detail: "unbounded log-likelihood ratio (zero channel entry)",
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.w1.len()
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn y1_size(&self) -> usize {
        self.y1_size
    }

    pub fn y2_size(&self) -> usize {
        self.y2_size
    }

    pub fn w1(&self, s: usize) -> &StochasticKernel {
        &self.w1[s]
    }

    pub fn w2(&self, s: usize) -> &StochasticKernel {
        &self.w2[s]
    }

    pub fn w_joint(&self, s: usize) -> &StochasticKernel {
        &self.w_joint[s]
    }
}

fn independent_joint(w1: &StochasticKernel, w2: &StochasticKernel) -> Result<StochasticKernel> {
    if w1.rows() != w2.rows() {
        return Err(Error::DimensionMismatch {
            what: "joint factor inputs",
            expected: w1.rows(),
            got: w2.rows(),
        });
    }
    let rows = (0..w1.rows())
        .map(|x| {
            let mut row = Vec::with_capacity(w1.cols() * w2.cols());
            for y1 in 0..w1.cols() {
                for y2 in 0..w2.cols() {
                    row.push(w1.get(x, y1) * w2.get(x, y2));
                }
            }
            row
        })
        .collect();
    StochasticKernel::from_rows(rows)
}

fn check_marginal(got: &StochasticKernel, want: &StochasticKernel, which: &str) -> Result<()> {
    for x in 0..want.rows() {
        for y in 0..want.cols() {
            if libm::fabs(got.get(x, y) - want.get(x, y)) > MARGINAL_TOLERANCE {
                return Err(Error::RejectedInput(alloc::format!(
                    "joint kernel does not marginalize to {which} at (x={x}, y={y})"
                )));
            }
        }
    }
    Ok(())
}

/// The maximin sensing input and the value it achieves.
#[derive(Debug, Clone)]
pub struct UniversalInput {
    pub p_tilde: Pmf,
    pub achieved_value: f64,
}

/// Objective of the universal-input problem:
/// `f(P) = min_{s != s'} D(w1[s] || w1[s'] | P)`, concave piecewise-linear.
pub fn sensing_objective(fam: &StateChannelFamily, p: &Pmf) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in 0..fam.num_states() {
        for s_prime in 0..fam.num_states() {
            if s == s_prime {
                continue;
            }
            best = best.min(conditional_kl(fam.w1(s), fam.w1(s_prime), p)?);
        }
    }
    Ok(best)
}

/// Finds the input distribution maximizing the worst-pair sensing divergence.
///
/// The objective is a minimum of functions linear in `P`, hence concave: a
/// simplex lattice search at `grid_resolution` points per dimension (capped
/// for wide alphabets) is followed by pairwise-coordinate ascent with
/// golden-section line searches. Ties prefer the uniform input, then the
/// lexicographically smallest lattice point.
pub fn universal_input(fam: &StateChannelFamily, grid_resolution: usize) -> Result<UniversalInput> {
    let n = fam.input_size();
    if n == 1 {
        let p = Pmf::point_mass(1, 0);
        let v = sensing_objective(fam, &p)?;
        return Ok(UniversalInput {
            p_tilde: p,
            achieved_value: v,
        });
    }

    let resolution = if n <= 3 {
        grid_resolution.max(2)
    } else {
        grid_resolution.clamp(2, 48)
    };

    let uniform = Pmf::uniform(n);
    let uniform_value = sensing_objective(fam, &uniform)?;

    // Lattice sweep in lexicographic order; first achiever of the max wins.
    let mut best_grid = uniform.clone();
    let mut best_grid_value = f64::NEG_INFINITY;
    let mut composition = vec![0usize; n];
    composition[0] = resolution;
    loop {
        let p = Pmf::new(
            composition
                .iter()
                .map(|&k| k as f64 / resolution as f64)
                .collect(),
        )?;
        let v = sensing_objective(fam, &p)?;
        if v > best_grid_value + crate::CMP_TOLERANCE {
            best_grid_value = v;
            best_grid = p;
        }
        if !next_composition(&mut composition) {
            break;
        }
    }

    // Pairwise-coordinate ascent from the best lattice point.
    let mut current: Vec<f64> = best_grid.probs().to_vec();
    let mut current_value = best_grid_value;
    for _ in 0..64 {
        let mut improved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mass = current[i] + current[j];
                if mass <= 0.0 {
                    continue;
                }
                let eval = |t: f64| -> f64 {
                    let mut probe = current.clone();
                    probe[i] = t * mass;
                    probe[j] = (1.0 - t) * mass;
                    match Pmf::new(probe) {
                        Ok(p) => sensing_objective(fam, &p).unwrap_or(f64::NEG_INFINITY),
                        Err(_) => f64::NEG_INFINITY,
                    }
                };
                let (t, v) = golden_line_max(eval);
                if v > current_value + 1e-14 {
                    current[i] = t * mass;
                    current[j] = (1.0 - t) * mass;
                    current_value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    // Tie-breaking: uniform wins ties, then the lattice point, then the
    // refined off-lattice point when it is a strict improvement.
    let (p_tilde, _) = if uniform_value >= current_value - crate::CMP_TOLERANCE {
        (uniform, uniform_value)
    } else if best_grid_value >= current_value - crate::CMP_TOLERANCE {
        (best_grid, best_grid_value)
    } else {
        (Pmf::new(current)?, current_value)
    };
    let achieved_value = sensing_objective(fam, &p_tilde)?;
    Ok(UniversalInput {
        p_tilde,
        achieved_value,
    })
}

fn golden_line_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > 1e-12 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Advances a composition (counts summing to a constant) to the next one in
/// lexicographic order; returns false after the last.
pub(crate) fn next_composition(c: &mut [usize]) -> bool {
    let n = c.len();
    if n <= 1 {
        return false;
    }
    // Standard enumeration: move one unit from the first nonzero prefix
    // position to the next position, resetting the tail.
    let total_tail: usize = c[..n - 1].iter().sum();
    if total_tail == 0 {
        return false;
    }
    let mut i = n - 2;
    loop {
        if c[i] > 0 {
            c[i] -= 1;
            c[i + 1] += 1;
            // Pull everything after i+1 back onto position i+1.
            let moved: usize = c[i + 2..].iter().sum();
            c[i + 1] += moved;
            for v in &mut c[i + 2..] {
                *v = 0;
            }
            return true;
        }
        if i == 0 {
            return false;
        }
        i -= 1;
    }
}


#[cfg(test)]
mod single_input_tests {
    use super::*;

    #[test]
    fn universal_input_single_symbol_alphabet() {
        let w1 = alloc::vec![
            StochasticKernel::from_rows(alloc::vec![alloc::vec![0.9, 0.1]]).unwrap(),
            StochasticKernel::from_rows(alloc::vec![alloc::vec![0.7, 0.3]]).unwrap(),
        ];
        let w2 = alloc::vec![
            StochasticKernel::from_rows(alloc::vec![alloc::vec![0.8, 0.2]]).unwrap(),
            StochasticKernel::from_rows(alloc::vec![alloc::vec![0.6, 0.4]]).unwrap(),
        ];
        let fam = StateChannelFamily::build(w1, w2, JointMode::ConditionallyIndependent).unwrap();
        let ui = universal_input(&fam, 100).unwrap();
        assert_eq!(ui.p_tilde.probs(), &[1.0]);
        assert!(ui.achieved_value > 0.0);
    }
}
