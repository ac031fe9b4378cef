//! Exact baselines: DP rejection ABC and the enumeration oracle for the
//! Bernoulli toy model.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::binomial_log_pmf;
use crate::error::{Error, Result};
use crate::models::{Model, SyntheticData};
use crate::pf::{AcceptanceHook, TemperLevel};
use crate::rng::{lanes, RandomStream, StreamId};
use crate::special::log_sum_exp;

/// I.i.d. draws from the private posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraws {
    pub samples: Vec<Vec<f64>>,
    pub trial_counts: Vec<u64>,
    pub acceptance_rate: f64,
}

impl RejectionDraws {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    /// Sample mean and its standard error for coordinate `j`.
    pub fn mean_and_se(&self, j: usize) -> (f64, f64) {
        let col = self.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// Repeat `θ ~ π0`, `x ~ f(·|θ)`, accept with probability `r(x)` until `count`
/// acceptances. Sample `i` uses its own stream, so output does not depend on
/// the worker count.
pub fn dp_reject_abc(
    model: &dyn Model,
    hook: &dyn AcceptanceHook,
    level: TemperLevel,
    count: usize,
    master_seed: u64,
    replicate: u64,
    max_attempts: u64,
) -> Result<RejectionDraws> {
    if count == 0 {
        return Err(Error::InsufficientSample { needed: 1, found: 0 });
    }
    let draws: Vec<(Vec<f64>, u64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::new(master_seed, StreamId::new(replicate, lanes::REJECTION, i as u64));
            let mut best = f64::NEG_INFINITY;
            for attempt in 1..=max_attempts {
                let theta = model.prior_sample(&mut rng);
                let data = if hook.needs_raw() {
                    model.simulate_data(&theta, &mut rng)
                } else {
                    SyntheticData::summaries_only(model.simulate_summaries(&theta, &mut rng))
                };
                let log_r = hook.log_acceptance(&data, &level)?;
                best = best.max(log_r);
                let u: f64 = rng.random();
                if u.ln() < log_r {
                    return Ok((theta, attempt));
                }
            }
            Err(Error::Stall {
                iteration: 1,
                particle: i,
                attempts: max_attempts,
                best_acceptance: best.exp(),
            })
        })
        .collect::<Result<_>>()?;
    let (samples, trial_counts): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let total: u64 = trial_counts.iter().sum();
    Ok(RejectionDraws {
        acceptance_rate: count as f64 / total as f64,
        samples,
        trial_counts,
    })
}

/// Posterior of the Bernoulli toy model on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OraclePosterior {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub posterior_mean: f64,
}

impl OraclePosterior {
    /// Trapezoid integral of `f · density`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let vals: Vec<f64> = self.grid.iter().zip(&self.density).map(|(t, d)| f(*t) * d).collect();
        h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]))
    }
}

/// Flat-prior toy posterior `∝ Σ_k C(n,k) θᵏ (1-θ)ⁿ⁻ᵏ (ε/2) exp(-ε|s_dp - k|)` on a
/// uniform grid over `[0, 1]`, trapezoid-normalized.
pub fn bernoulli_oracle(n: u64, s_dp: f64, epsilon: f64, grid_size: usize) -> Result<OraclePosterior> {
    if grid_size < 100 {
        return Err(Error::Config(format!("oracle grid needs at least 100 points, got {grid_size}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::ParameterDomain(format!("epsilon must be positive, got {epsilon}")));
    }
    let lap: Vec<f64> = (0..=n)
        .map(|k| (epsilon / 2.0).ln() - epsilon * (s_dp - k as f64).abs())
        .collect();
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    let log_dens: Vec<f64> = grid
        .iter()
        .map(|&theta| {
            let terms: Vec<f64> = (0..=n)
                .map(|k| binomial_log_pmf(n, k, theta) + lap[k as usize])
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    let shift = log_dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut density: Vec<f64> = log_dens.iter().map(|l| (l - shift).exp()).collect();
    let h = 1.0 / (grid_size - 1) as f64;
    let mass = h * (density.iter().sum::<f64>() - 0.5 * (density[0] + density[grid_size - 1]));
    for d in &mut density {
        *d /= mass;
    }
    let mut post = OraclePosterior {
        grid,
        density,
        posterior_mean: 0.0,
    };
    post.posterior_mean = post.integrate(|t| t);
    Ok(post)
}

fn toy_mixture(n: u64, s_dp: f64, epsilon: f64) -> Vec<f64> {
    let logs: Vec<f64> = (0..=n).map(|k| -epsilon * (s_dp - k as f64).abs()).collect();
    let total = log_sum_exp(&logs);
    logs.iter().map(|l| (l - total).exp()).collect()
}

/// Closed-form flat-prior toy posterior mean: a mixture of `Beta(k+1, n-k+1)`
/// means with weights `∝ exp(-ε|s_dp - k|)`.
pub fn bernoulli_exact_mean(n: u64, s_dp: f64, epsilon: f64) -> f64 {
    toy_mixture(n, s_dp, epsilon)
        .iter()
        .enumerate()
        .map(|(k, p)| p * (k as f64 + 1.0) / (n as f64 + 2.0))
        .sum()
}

/// Closed-form flat-prior toy posterior variance.
pub fn bernoulli_exact_variance(n: u64, s_dp: f64, epsilon: f64) -> f64 {
    let nf = n as f64;
    let (m1, m2) = toy_mixture(n, s_dp, epsilon)
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(m1, m2), (k, p)| {
            let k = k as f64;
            (
                m1 + p * (k + 1.0) / (nf + 2.0),
                m2 + p * (k + 1.0) * (k + 2.0) / ((nf + 2.0) * (nf + 3.0)),
            )
        });
    m2 - m1 * m1
}

/// Probability that one prior-proposal attempt is accepted at budget `epsilon`:
/// `(1/(n+1)) Σ_k exp(-ε|s_dp - k|)`.
pub fn bernoulli_acceptance_probability(n: u64, s_dp: f64, epsilon: f64) -> f64 {
    (0..=n)
        .map(|k| (-epsilon * (s_dp - k as f64).abs()).exp())
        .sum::<f64>()
        / (n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_single_trial() {
        let post = bernoulli_oracle(1, 0.5, 1.0, 4001).unwrap();
        assert!((post.posterior_mean - 0.5).abs() < 1e-12);
        assert!((post.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_closed_form() {
        let post = bernoulli_oracle(20, 7.3, 1.0, 4001).unwrap();
        assert!((post.posterior_mean - bernoulli_exact_mean(20, 7.3, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn noiseless_limit() {
        let m = bernoulli_exact_mean(10, 3.0, 200.0);
        assert!((m - 4.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(bernoulli_oracle(5, 1.0, 1.0, 50).is_err());
    }
}
