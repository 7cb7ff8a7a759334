//! Cross-validation of the analytic first-passage density against the
//! Kolmogorov forward equations and Monte Carlo simulation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flowgraph::FirstPassage;
use crate::mjp::{first_passage_cdf_from, ks_distance, simulate_embedding, Embedding, MAX_JUMPS};

/// Step of the finite-difference derivative of the ODE CDF.
pub const DIFF_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub n: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// Right end of the comparison grid; chosen from the analytic tail when `None`.
    pub t_max: Option<f64>,
    pub ode_tol: f64,
    pub ks_tol: f64,
    pub max_jumps: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            n: 200_000,
            seed: 1,
            grid_points: 1000,
            t_max: None,
            ode_tol: 1e-5,
            ks_tol: 0.01,
            max_jumps: MAX_JUMPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub reach_probability: f64,
    pub t_max: f64,
    pub grid_points: usize,
    /// Sup-norm gap between the analytic density and the derivative of the ODE CDF.
    pub ode_sup_diff: f64,
    pub ode_tol: f64,
    /// KS distance between simulated passage times and the analytic CDF.
    pub ks_distance: f64,
    pub ks_tol: f64,
    pub replicates: usize,
    pub reached: usize,
    pub censored: usize,
    pub absorbed_elsewhere: usize,
    pub seed: u64,
}

impl CheckReport {
    pub fn ode_passed(&self) -> bool {
        self.ode_sup_diff < self.ode_tol
    }

    pub fn mc_passed(&self) -> bool {
        self.ks_distance < self.ks_tol
    }

    pub fn passed(&self) -> bool {
        self.ode_passed() && self.mc_passed()
    }
}

/// Time by which the conditional survival drops below `1e-6`.
pub fn default_horizon(fp: &FirstPassage) -> Result<f64> {
    let mean = fp.mean()?;
    let mut t = mean.max(1e-3);
    while fp.functions(t).survival > 1e-6 {
        t *= 2.0;
        if t > 1e6 * mean.max(1.0) {
            return Err(Error::Numerical("could not find a horizon covering the distribution".into()));
        }
    }
    Ok(t)
}

/// Evenly spaced grid of `points` times on `[0, t_max]`.
pub fn grid(t_max: f64, points: usize) -> Vec<f64> {
    let last = (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|i| t_max * i as f64 / last).collect()
}

/// Density of the (defective) first-passage CDF of `chain` on `times`,
/// by central differences of the ODE solution (second-order one-sided at 0).
pub fn ode_density(chain: &Embedding, times: &[f64]) -> Result<Vec<f64>> {
    let h = DIFF_STEP;
    if times.windows(2).any(|w| !(w[1] - w[0] > 2.0 * h)) {
        return Err(Error::InvalidParameter(format!("grid spacing must exceed {}", 2.0 * h)));
    }
    let mut eval = Vec::with_capacity(3 * times.len());
    for &t in times {
        if t == 0.0 {
            eval.extend([0.0, h, 2.0 * h]);
        } else {
            eval.extend([t - h, t, t + h]);
        }
    }
    let cdf = first_passage_cdf_from(&chain.q, &chain.initial, chain.target, &eval)?;
    Ok(times
        .iter()
        .zip(cdf.chunks(3))
        .map(|(&t, c)| {
            if t == 0.0 {
                (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * h)
            } else {
                (c[2] - c[0]) / (2.0 * h)
            }
        })
        .collect())
}

/// Runs the ODE and Monte Carlo oracles against an analytic solution.
pub fn cross_validate(analytic: &FirstPassage, chain: &Embedding, opts: &CheckOptions) -> Result<CheckReport> {
    let t_max = match opts.t_max {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidParameter(format!("t-max must be positive, got {t}"))),
        None => default_horizon(analytic)?,
    };
    let times = grid(t_max, opts.grid_points);
    let ode = ode_density(chain, &times)?;
    let ode_sup_diff = times
        .iter()
        .zip(&ode)
        .map(|(&t, d)| (analytic.reach_probability * analytic.density.density(t) - d).abs())
        .fold(0.0, f64::max);

    let sim = simulate_embedding(chain, opts.n, opts.seed, opts.max_jumps)?;
    let ks = if sim.samples.is_empty() {
        1.0
    } else {
        ks_distance(&sim.samples, |t| analytic.functions(t).cdf)?
    };
    Ok(CheckReport {
        reach_probability: analytic.reach_probability,
        t_max,
        grid_points: times.len(),
        ode_sup_diff,
        ode_tol: opts.ode_tol,
        ks_distance: ks,
        ks_tol: opts.ks_tol,
        replicates: sim.replicates(),
        reached: sim.samples.len(),
        censored: sim.censored,
        absorbed_elsewhere: sim.absorbed_elsewhere,
        seed: opts.seed,
    })
}
