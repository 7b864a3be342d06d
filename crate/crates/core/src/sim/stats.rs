//! Campaign-level statistics: detection-exponent regression over a horizon
//! grid and stopping-time tail analysis against the concentration bounds.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::{azuma_params, mgf_exponent};
use crate::prob::Seed;
use crate::sim::trial::{SimContext, SimReport};

/// One `(horizon, error estimate)` sample of a campaign.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentSample {
    pub n: usize,
    pub trials: u64,
    pub p_hat: f64,
}

impl ExponentSample {
    pub fn from_counts(n: usize, trials: u64, errors: u64) -> Self {
        ExponentSample {
            n,
            trials,
            p_hat: errors as f64 / trials.max(1) as f64,
        }
    }

    /// Estimability floor: enough expected error events to trust the point.
    pub fn estimable(&self) -> bool {
        self.p_hat >= 100.0 / self.trials.max(1) as f64
    }
}

/// Least-squares fit of `-ln p_hat` against `n`.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentFit {
    /// Exponent estimate in nats per channel use.
    pub slope: f64,
    pub intercept: f64,
    /// Bootstrap 95% interval on the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    /// All points passed the estimability floor and at least three exist.
    pub estimable: bool,
    /// Indices of samples below the floor.
    pub flagged: Vec<usize>,
    pub r_squared: f64,
    /// The curve actually decays log-linearly (positive slope, high R^2).
    pub exponential_decay: bool,
}

/// Fits `-ln p_hat = intercept + slope * n` with a parametric bootstrap
/// confidence interval (binomial resampling via normal approximation,
/// justified by the estimability floor of 100 expected events).
pub fn estimate_exponents(
    samples: &[ExponentSample],
    bootstrap: usize,
    seed: Seed,
) -> Result<ExponentFit> {
    let usable: Vec<&ExponentSample> = samples.iter().filter(|s| s.p_hat > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::RejectedInput(
            "exponent regression needs at least two nonzero points".into(),
        ));
    }
    let flagged: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.estimable())
        .map(|(i, _)| i)
        .collect();
    let estimable = flagged.is_empty() && samples.len() >= 3;

    let fit = |ys: &[f64]| -> (f64, f64) {
        let xs: Vec<f64> = usable.iter().map(|s| s.n as f64).collect();
        least_squares(&xs, ys)
    };
    let ys: Vec<f64> = usable.iter().map(|s| -libm::log(s.p_hat)).collect();
    let (slope, intercept) = fit(&ys);

    // R^2 of the fit.
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = usable
        .iter()
        .zip(&ys)
        .map(|(s, y)| {
            let pred = intercept + slope * s.n as f64;
            (y - pred) * (y - pred)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    let mut rng = seed.rng();
    let mut slopes = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let resampled: Vec<f64> = usable
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s.p_hat * (1.0 - s.p_hat) / s.trials.max(1) as f64);
                let z = gaussian(&mut rng);
                let p = (s.p_hat + z * sd).clamp(0.5 / s.trials.max(2) as f64, 1.0);
                -libm::log(p)
            })
            .collect();
        slopes.push(fit(&resampled).0);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (ci_low, ci_high) = if slopes.is_empty() {
        (slope, slope)
    } else {
        (
            slopes[(slopes.len() as f64 * 0.025) as usize],
            slopes[((slopes.len() as f64 * 0.975) as usize).min(slopes.len() - 1)],
        )
    };

    Ok(ExponentFit {
        slope,
        intercept,
        ci_low,
        ci_high,
        estimable,
        flagged,
        r_squared,
        exponential_decay: slope > 1e-12 && r_squared >= 0.9,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn gaussian(rng: &mut crate::prob::Rng) -> f64 {
    let u1 = rng.uniform().max(1e-300);
    let u2 = rng.uniform();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// One point of the stopping-time tail overlay.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailPoint {
    pub n_prime: usize,
    pub empirical: f64,
    pub events: u64,
    /// Martingale concentration bound `(|S|-1) exp(-n' min psi^2 / 2 phi^2)`.
    pub azuma: f64,
    /// Estimator-transient bound `(|S|-1) exp(-c0 n')`.
    pub transient: f64,
}

/// Tail curve with the two analytic overlays and the comparison verdicts.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailReport {
    pub points: Vec<TailPoint>,
    /// Worst-pair drift margin and increment bound behind the Azuma curve.
    pub psi: f64,
    pub phi: f64,
    /// Worst-pair transient exponent.
    pub c0: f64,
    /// Empirical tail within 3x the Azuma bound at every estimable point.
    pub within_azuma: bool,
    /// Log-tail strictly decreasing across estimable interior points.
    pub strictly_decreasing: bool,
}

const TAIL_ESTIMABLE_EVENTS: u64 = 10;

/// Builds the empirical `P(tau > n')` curve from a campaign report and
/// overlays the martingale and transient bounds.
pub fn stopping_tail(ctx: &SimContext, report: &SimReport) -> Result<TailReport> {
    let cfg = ctx.config();
    let fam = &cfg.family;
    let s = cfg.true_state;
    let states = fam.num_states();

    // Worst alternative for each bound.
    let mut rate_azuma = f64::INFINITY;
    let mut worst_phi = 0.0f64;
    let mut worst_psi = f64::INFINITY;
    let mut c0 = f64::INFINITY;
    for s_prime in 0..states {
        if s_prime == s {
            continue;
        }
        let (phi, psi) = azuma_params(
            cfg.policy.input(s),
            fam.w1(s),
            fam.w1(s_prime),
            cfg.delta,
            cfg.epsilon,
        )?;
        let pair_rate = if psi > 0.0 && phi > 0.0 {
            psi * psi / (2.0 * phi * phi)
        } else {
            0.0
        };
        if pair_rate < rate_azuma {
            rate_azuma = pair_rate;
            worst_phi = phi;
            worst_psi = psi;
        }
        let (pair_c0, _) = mgf_exponent(cfg.policy.input(s), fam.w1(s), fam.w1(s_prime))?;
        c0 = c0.min(pair_c0);
    }

    let trials = report.trials.max(1);
    let mut points = Vec::with_capacity(report.tau_tail.len());
    for &(n_prime, empirical) in &report.tau_tail {
        let events = libm::round(empirical * trials as f64) as u64;
        let azuma = ((states - 1) as f64 * libm::exp(-(n_prime as f64) * rate_azuma)).min(1.0);
        let transient = ((states - 1) as f64 * libm::exp(-c0 * n_prime as f64)).min(1.0);
        points.push(TailPoint {
            n_prime,
            empirical,
            events,
            azuma,
            transient,
        });
    }

    let within_azuma = points
        .iter()
        .filter(|p| p.events >= TAIL_ESTIMABLE_EVENTS)
        .all(|p| p.empirical <= 3.0 * p.azuma);

    // Strict decay is judged on ~10 waypoints across the decaying region;
    // adjacent block boundaries can tie when only a few trials remain.
    let interior: Vec<&TailPoint> = points
        .iter()
        .filter(|p| p.events >= TAIL_ESTIMABLE_EVENTS && p.empirical < 1.0)
        .collect();
    let strictly_decreasing = if interior.len() < 2 {
        true
    } else {
        let stride = (interior.len() / 10).max(1);
        let mut waypoints: Vec<&TailPoint> = interior.iter().step_by(stride).copied().collect();
        let last = interior[interior.len() - 1];
        if waypoints.last().map(|p| p.n_prime) != Some(last.n_prime) {
            waypoints.push(last);
        }
        waypoints
            .windows(2)
            .all(|w| w[1].empirical < w[0].empirical)
    };

    Ok(TailReport {
        points,
        psi: worst_psi,
        phi: worst_phi,
        c0,
        within_azuma,
        strictly_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_log_linear_recovers_slope() {
        let samples: Vec<ExponentSample> = [200usize, 400, 600, 800]
            .iter()
            .map(|&n| ExponentSample {
                n,
                trials: 1_000_000_000,
                p_hat: libm::exp(-0.01 * n as f64),
            })
            .collect();
        let fit = estimate_exponents(&samples, 200, Seed::new(1, 0)).unwrap();
        assert!((fit.slope - 0.01).abs() <= 1e-12, "slope {}", fit.slope);
        assert!(fit.estimable);
        assert!(fit.exponential_decay);
        assert!(fit.ci_low <= 0.01 && 0.01 <= fit.ci_high);
    }

    #[test]
    fn constant_curve_is_flagged_non_exponential() {
        let samples: Vec<ExponentSample> = [200usize, 400, 600]
            .iter()
            .map(|&n| ExponentSample {
                n,
                trials: 1_000_000,
                p_hat: 0.25,
            })
            .collect();
        let fit = estimate_exponents(&samples, 100, Seed::new(2, 0)).unwrap();
        assert!(fit.slope.abs() <= 1e-12);
        assert!(!fit.exponential_decay);
    }

    #[test]
    fn floor_violation_is_flagged() {
        let samples = vec![
            ExponentSample::from_counts(200, 1000, 400),
            ExponentSample::from_counts(400, 1000, 50), // below 100 events
            ExponentSample::from_counts(600, 1000, 120),
        ];
        let fit = estimate_exponents(&samples, 50, Seed::new(3, 0)).unwrap();
        assert!(!fit.estimable);
        assert_eq!(fit.flagged, vec![1]);
    }

    #[test]
    fn too_few_points_rejected() {
        let samples = vec![ExponentSample::from_counts(200, 1000, 100)];
        assert!(estimate_exponents(&samples, 10, Seed::new(4, 0)).is_err());
    }
}
