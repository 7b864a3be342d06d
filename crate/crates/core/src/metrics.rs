//! Scalar information measures over finite alphabets.
//!
//! All values are in nats. Infinite divergences are returned as
//! `f64::INFINITY`; they arise from absolute-continuity failures and
//! propagate through comparisons, never through arithmetic sums (every
//! routine short-circuits before adding an infinity into a running total).

use crate::error::{Error, Result};
use crate::prob::{push_forward, Pmf, StochasticKernel};

/// Shannon entropy `-Σ a ln a` of a nonnegative vector, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &a in probs {
        if a > 0.0 {
            h -= a * libm::log(a);
        }
    }
    h
}

/// KL divergence `D(p || q) = Σ_x p(x) ln(p(x)/q(x))`.
///
/// Returns `f64::INFINITY` when `p` puts mass where `q` does not.
pub fn kl(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch {
            what: "kl alphabets",
            expected: p.alphabet_size(),
            got: q.alphabet_size(),
        });
    }
    Ok(kl_slices(p.probs(), q.probs()))
}

fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi == 0.0 {
                return f64::INFINITY;
            }
            d += pi * libm::log(pi / qi);
        }
    }
    d
}

/// Conditional KL divergence `D(w1 || w2 | p) = Σ_x p(x) D(w1(.|x) || w2(.|x))`.
pub fn conditional_kl(w1: &StochasticKernel, w2: &StochasticKernel, p: &Pmf) -> Result<f64> {
    check_kernel_pair(w1, w2, p)?;
    let mut d = 0.0;
    for x in 0..w1.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        let row = kl_slices(w1.row(x), w2.row(x));
        if row.is_infinite() {
            return Ok(f64::INFINITY);
        }
        d += px * row;
    }
    Ok(d)
}

fn check_kernel_pair(w1: &StochasticKernel, w2: &StochasticKernel, p: &Pmf) -> Result<()> {
    if w1.rows() != w2.rows() || w1.cols() != w2.cols() {
        return Err(Error::DimensionMismatch {
            what: "kernel shapes",
            expected: w1.rows() * w1.cols(),
            got: w2.rows() * w2.cols(),
        });
    }
    if p.alphabet_size() != w1.rows() {
        return Err(Error::DimensionMismatch {
            what: "input alphabet",
            expected: w1.rows(),
            got: p.alphabet_size(),
        });
    }
    Ok(())
}

const GOLDEN_TOL: f64 = 1e-10;

/// Golden-section search for the maximum of a concave function on `[a, b]`.
/// Returns `(argmax, max)` once the bracketing interval is below `tol`.
fn golden_max(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
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

/// Negative log lambda-moment `-ln Σ_x p(x)^λ q(x)^(1-λ)` restricted to the
/// common support (the `0^λ 0^(1-λ) = 0` convention). Concave in λ.
fn neg_log_moment(p: &[f64], q: &[f64], lambda: f64) -> f64 {
    let mut m = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 && qi > 0.0 {
            m += libm::exp(lambda * libm::log(pi) + (1.0 - lambda) * libm::log(qi));
        }
    }
    if m <= 0.0 {
        f64::INFINITY
    } else {
        -libm::log(m)
    }
}

/// Chernoff information `max_{λ in [0,1]} -ln Σ_x p(x)^λ q(x)^(1-λ)`,
/// together with the maximizing λ.
///
/// The objective is concave in λ and solved by golden-section search;
/// disjoint supports yield the `f64::INFINITY` sentinel.
pub fn chernoff(p: &Pmf, q: &Pmf) -> Result<(f64, f64)> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch {
            what: "chernoff alphabets",
            expected: p.alphabet_size(),
            got: q.alphabet_size(),
        });
    }
    if !p
        .probs()
        .iter()
        .zip(q.probs())
        .any(|(&a, &b)| a > 0.0 && b > 0.0)
    {
        return Ok((f64::INFINITY, 0.5));
    }
    let (lambda, value) = golden_max(0.0, 1.0, GOLDEN_TOL, |l| {
        neg_log_moment(p.probs(), q.probs(), l)
    });
    Ok((value.max(0.0), lambda))
}

/// Conditional Chernoff information
/// `max_{λ in [0,1]} -Σ_x p(x) ln Σ_y w1(y|x)^λ w2(y|x)^(1-λ)`.
///
/// A single shared λ is maximized for the p-weighted sum of per-row negative
/// log moments (not the weighted sum of per-row Chernoff informations).
pub fn conditional_chernoff(w1: &StochasticKernel, w2: &StochasticKernel, p: &Pmf) -> Result<f64> {
    check_kernel_pair(w1, w2, p)?;
    let objective = |l: f64| {
        let mut v = 0.0;
        for x in 0..w1.rows() {
            let px = p.get(x);
            if px == 0.0 {
                continue;
            }
            let row = neg_log_moment(w1.row(x), w2.row(x), l);
            if row.is_infinite() {
                return f64::INFINITY;
            }
            v += px * row;
        }
        v
    };
    if objective(0.5).is_infinite() {
        return Ok(f64::INFINITY);
    }
    let (_, value) = golden_max(0.0, 1.0, GOLDEN_TOL, objective);
    Ok(value.max(0.0))
}

/// Mutual information `I(p; w) = Σ_x p(x) D(w(.|x) || p∘w)` in nats.
pub fn mutual_information(p: &Pmf, w: &StochasticKernel) -> Result<f64> {
    if p.alphabet_size() != w.rows() {
        return Err(Error::DimensionMismatch {
            what: "mutual information input",
            expected: w.rows(),
            got: p.alphabet_size(),
        });
    }
    let marginal = push_forward(p, w)?;
    let mut mi = 0.0;
    for x in 0..w.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        mi += px * kl_slices(w.row(x), marginal.probs());
    }
    Ok(mi.max(0.0))
}

/// Conditional entropy `H(Y1 | X, Y2)` in nats, under the joint law
/// `p(x) w_joint(y1, y2 | x)` with outputs flattened as `y1 * y2_size + y2`.
///
/// Computed as `Σ_x p(x) [H(w_joint(.|x)) - H(w_y2(.|x))]`.
pub fn key_rate(p: &Pmf, w_joint: &StochasticKernel, y2_size: usize) -> Result<f64> {
    if p.alphabet_size() != w_joint.rows() {
        return Err(Error::DimensionMismatch {
            what: "key_rate input",
            expected: w_joint.rows(),
            got: p.alphabet_size(),
        });
    }
    if y2_size == 0 || w_joint.cols() % y2_size != 0 {
        return Err(Error::DimensionMismatch {
            what: "key_rate product alphabet",
            expected: y2_size,
            got: w_joint.cols(),
        });
    }
    let y1_size = w_joint.cols() / y2_size;
    let mut h = 0.0;
    for x in 0..w_joint.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        let mut y2_marginal = alloc::vec![0.0; y2_size];
        for y1 in 0..y1_size {
            for y2 in 0..y2_size {
                y2_marginal[y2] += w_joint.get(x, y1 * y2_size + y2);
            }
        }
        h += px * (entropy(w_joint.row(x)) - entropy(&y2_marginal));
    }
    Ok(h.max(0.0))
}

/// Total variation distance `(1/2) Σ_x |p(x) - q(x)|`.
pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch {
            what: "total variation alphabets",
            expected: p.alphabet_size(),
            got: q.alphabet_size(),
        });
    }
    Ok(0.5
        * p.probs()
            .iter()
            .zip(q.probs())
            .map(|(&a, &b)| libm::fabs(a - b))
            .sum::<f64>())
}

/// Search window for the log-moment-generating-function exponent. For
/// all-positive kernels the objective diverges as λ → -∞, and on
/// desk-scale channels the optimum sits well inside this window; the
/// derivative sign at the boundary is checked in tests.
pub const MGF_LAMBDA_MIN: f64 = -20.0;

/// Log moment generating function of the pairwise log-likelihood ratio,
/// `υ(λ) = ln Σ_{x,y} p(x) w1(y|x) (w1(y|x)/w2(y|x))^λ`, restricted to the
/// support of the true measure.
pub fn llr_log_mgf(p: &Pmf, w1: &StochasticKernel, w2: &StochasticKernel, lambda: f64) -> f64 {
    let mut m = 0.0;
    for x in 0..w1.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        for y in 0..w1.cols() {
            let a = w1.get(x, y);
            if a == 0.0 {
                continue;
            }
            let b = w2.get(x, y);
            if b == 0.0 {
                // Ratio is +inf; for λ < 0 the term vanishes in the limit.
                continue;
            }
            m += px * a * libm::exp(lambda * libm::log(a / b));
        }
    }
    libm::log(m)
}

/// Decay exponent `c0 = -min_{λ in [MGF_LAMBDA_MIN, 0]} υ(λ)` of the
/// estimator-transient tail, with the minimizing λ.
///
/// `υ` is convex with `υ(0) = 0` and `υ'(0) = D(w1||w2|p) > 0`, so the
/// minimum is negative and `c0 > 0` for any distinguishable pair.
pub fn mgf_exponent(p: &Pmf, w1: &StochasticKernel, w2: &StochasticKernel) -> Result<(f64, f64)> {
    check_kernel_pair(w1, w2, p)?;
    let d = conditional_kl(w1, w2, p)?;
    if d.is_infinite() {
        return Err(Error::RejectedInput(
            "log-likelihood ratio is unbounded (zero channel entry)".into(),
        ));
    }
    if d <= 0.0 {
        return Err(Error::DegenerateModel {
            s: 0,
            s_prime: 1,
            x: 0,
            detail: "channels indistinguishable under this input",
        });
    }
    // Minimize convex υ = maximize -υ.
    let (lambda, neg_v) = golden_max(MGF_LAMBDA_MIN, 0.0, GOLDEN_TOL, |l| {
        -llr_log_mgf(p, w1, w2, l)
    });
    Ok((neg_v, lambda))
}

/// Bounded-difference and drift-slack parameters for the stopping-time
/// concentration bound.
///
/// `phi = max_{x,y} |ln(w1(y|x)/w2(y|x)) - D(w1||w2|p)|` bounds the
/// martingale increments; `psi = eps - delta * D(w1||w2|p)` is the drift
/// margin left after reserving a `delta` fraction of each block for type
/// signaling. Both require strictly positive kernels.
pub fn azuma_params(
    p: &Pmf,
    w1: &StochasticKernel,
    w2: &StochasticKernel,
    delta: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    check_kernel_pair(w1, w2, p)?;
    for x in 0..w1.rows() {
        for y in 0..w1.cols() {
            if w1.get(x, y) <= 0.0 || w2.get(x, y) <= 0.0 {
                return Err(Error::DegenerateModel {
                    s: 0,
                    s_prime: 1,
                    x,
                    detail: "zero channel entry (noise-free observation)",
                });
            }
        }
    }
    let d = conditional_kl(w1, w2, p)?;
    let mut phi = 0.0f64;
    for x in 0..w1.rows() {
        for y in 0..w1.cols() {
            let diff = libm::fabs(libm::log(w1.get(x, y) / w2.get(x, y)) - d);
            phi = phi.max(diff);
        }
    }
    Ok((phi, eps - delta * d))
}

/// Binary entropy in nats, `h(p) = -p ln p - (1-p) ln(1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// Evaluates `-ln Σ p^λ q^(1-λ)` on a uniform λ-grid and returns the best
/// value. Slow; used as an independent cross-check of the golden-section
/// optimizer in tests and diagnostics.
pub fn chernoff_grid(p: &Pmf, q: &Pmf, grid_points: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..=grid_points {
        let l = i as f64 / grid_points as f64;
        let v = neg_log_moment(p.probs(), q.probs(), l);
        if v.is_finite() {
            best = best.max(v);
        }
    }
    best
}

/// Grid cross-check with one parabolic-interpolation step through the best
/// grid triple. Still independent of the golden-section path (it only uses
/// grid evaluations of the λ-moment); the refinement removes the `O(h^2)`
/// discretization bias so the comparison tolerance can sit at 1e-9.
pub fn chernoff_grid_refined(p: &Pmf, q: &Pmf, grid_points: usize) -> f64 {
    let eval = |l: f64| neg_log_moment(p.probs(), q.probs(), l);
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0usize;
    for i in 0..=grid_points {
        let v = eval(i as f64 / grid_points as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return f64::INFINITY;
    }
    if best_i == 0 || best_i == grid_points {
        return best.max(0.0);
    }
    let h = 1.0 / grid_points as f64;
    let x0 = best_i as f64 * h;
    let (fm, f0, fp) = (eval(x0 - h), eval(x0), eval(x0 + h));
    let denom = fm - 2.0 * f0 + fp;
    if denom.abs() > 0.0 {
        let vertex = x0 + 0.5 * h * (fm - fp) / denom;
        if (0.0..=1.0).contains(&vertex) {
            best = best.max(eval(vertex));
        }
    }
    best.max(0.0)
}
