use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hook::{AcceptanceHook, TemperLevel};
use super::kernel::GaussianKernel;
use super::schedule::{KernelSpec, Schedule};
use crate::error::{Error, Result};
use crate::estimators::ess_hat;
use crate::models::{Model, SyntheticData};
use crate::resample::Categorical;
use crate::rng::{RandomStream, StreamId};

/// Where a rejected attempt restarts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartPoint {
    /// Draw a fresh ancestor by resampling.
    #[default]
    Resample,
    /// Re-perturb the same ancestor.
    Perturb,
}

/// How the proposal mixture in the weight denominator treats prior support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightDenominator {
    /// Each kernel is divided by its mass on the prior support, matching the
    /// law of support-retried perturbations.
    #[default]
    SupportCorrected,
    /// Untruncated kernel densities.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfOptions {
    pub particles: usize,
    pub master_seed: u64,
    pub replicate: u64,
    pub restart: RestartPoint,
    pub denominator: WeightDenominator,
    /// Attempts per particle per iteration before giving up.
    pub max_attempts: u64,
}

impl PfOptions {
    pub fn new(particles: usize, master_seed: u64) -> Self {
        Self {
            particles,
            master_seed,
            replicate: 0,
            restart: RestartPoint::default(),
            denominator: WeightDenominator::default(),
            max_attempts: 10_000_000,
        }
    }

    pub fn replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    fn stream(&self, iteration: usize, particle: usize) -> RandomStream {
        RandomStream::new(
            self.master_seed,
            StreamId::new(self.replicate, iteration as u64, particle as u64),
        )
    }
}

/// Weighted particles at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub iteration: usize,
    pub dim: usize,
    /// Row-major `N × dim`.
    pub theta: Vec<f64>,
    /// Summaries of each accepted synthetic dataset (empty at iteration 0).
    pub summaries: Vec<Vec<f64>>,
    /// Unnormalized log weights `ln w̃`.
    pub log_weights: Vec<f64>,
    /// Normalized weights.
    pub weights: Vec<f64>,
    /// Attempts until acceptance.
    pub trial_counts: Vec<u64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.theta[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.theta.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn ess(&self) -> f64 {
        ess_hat(&self.weights).unwrap_or(0.0)
    }
}

/// One accepted particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    pub theta: Vec<f64>,
    pub summaries: Vec<f64>,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub epsilon: f64,
    pub q: Option<f64>,
    pub ess: f64,
    pub mean_trials: f64,
    pub total_attempts: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PfRun {
    pub particles: ParticleSet,
    pub diagnostics: Vec<IterationDiagnostics>,
}

impl PfRun {
    /// Sampler wall time over all iterations.
    pub fn seconds(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.seconds).sum()
    }
}

/// `N` prior draws with equal weights.
pub fn initialize(model: &dyn Model, opts: &PfOptions) -> Result<ParticleSet> {
    let n = opts.particles;
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, found: n });
    }
    let theta: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = opts.stream(0, i);
            model.prior_sample(&mut rng)
        })
        .collect();
    Ok(ParticleSet {
        iteration: 0,
        dim: model.dim(),
        theta,
        summaries: vec![Vec::new(); n],
        log_weights: vec![0.0; n],
        weights: vec![1.0 / n as f64; n],
        trial_counts: vec![1; n],
    })
}

/// The kernel used at iteration `t` (1-based), or `None` for prior proposals.
pub fn build_kernel(prev: &ParticleSet, schedule: &Schedule, t: usize) -> Result<Option<GaussianKernel>> {
    if t == 1 && schedule.prior_first {
        return Ok(None);
    }
    match &schedule.kernel {
        KernelSpec::Prior => Ok(None),
        KernelSpec::Fixed { scales } => GaussianKernel::isotropic(scales[t - 1], prev.dim).map(Some),
        KernelSpec::Adaptive { factor, ridge } => {
            GaussianKernel::adaptive(&prev.theta, &prev.weights, prev.dim, *factor, *ridge).map(Some)
        }
    }
}

/// Proposal machinery for one iteration: ancestor sampler and kernel.
pub struct Propagator<'a> {
    prev: &'a ParticleSet,
    kernel: Option<GaussianKernel>,
    ancestors: Categorical,
    level: TemperLevel,
    iteration: usize,
}

impl<'a> Propagator<'a> {
    pub fn new(prev: &'a ParticleSet, schedule: &Schedule, t: usize) -> Result<Self> {
        if t == 0 || t > schedule.len() {
            return Err(Error::Config(format!("iteration {t} outside 1..={}", schedule.len())));
        }
        Ok(Self {
            prev,
            kernel: build_kernel(prev, schedule, t)?,
            ancestors: Categorical::new(&prev.weights)?,
            level: TemperLevel {
                epsilon: schedule.epsilons[t - 1],
                q: schedule.q.as_ref().map(|q| q[t - 1]),
            },
            iteration: t,
        })
    }

    pub fn kernel(&self) -> Option<&GaussianKernel> {
        self.kernel.as_ref()
    }

    pub fn level(&self) -> TemperLevel {
        self.level
    }

    /// Repeat propose → simulate → accept/reject until one acceptance.
    pub fn accept_one(
        &self,
        model: &dyn Model,
        hook: &dyn AcceptanceHook,
        particle: usize,
        rng: &mut RandomStream,
        restart: RestartPoint,
        max_attempts: u64,
    ) -> Result<Accepted> {
        let mut best = f64::NEG_INFINITY;
        let mut ancestor: Option<usize> = None;
        let stall = |attempts: u64, best: f64| Error::Stall {
            iteration: self.iteration,
            particle,
            attempts,
            best_acceptance: best.exp(),
        };
        let mut attempts = 0u64;
        loop {
            if attempts >= max_attempts {
                return Err(stall(attempts, best));
            }
            attempts += 1;
            let theta = match &self.kernel {
                None => model.prior_sample(rng),
                Some(kernel) => {
                    let j = match (restart, ancestor) {
                        (RestartPoint::Perturb, Some(j)) => j,
                        _ => self.ancestors.sample(rng),
                    };
                    ancestor = Some(j);
                    let mut retries = 0u64;
                    loop {
                        let th = kernel.perturb(self.prev.particle(j), rng);
                        if model.prior_log_density(&th) > f64::NEG_INFINITY {
                            break th;
                        }
                        retries += 1;
                        if retries >= max_attempts {
                            return Err(stall(attempts, best));
                        }
                    }
                }
            };
            let data = if hook.needs_raw() {
                model.simulate_data(&theta, rng)
            } else {
                SyntheticData::summaries_only(model.simulate_summaries(&theta, rng))
            };
            let log_r = hook.log_acceptance(&data, &self.level)?;
            if log_r.is_nan() || log_r > 1e-9 {
                return Err(Error::Numeric(format!("acceptance log-probability {log_r} outside (-inf, 0]")));
            }
            best = best.max(log_r);
            let u: f64 = rng.random();
            if u.ln() < log_r {
                return Ok(Accepted {
                    theta,
                    summaries: data.summaries,
                    trials: attempts,
                });
            }
        }
    }
}

/// Propagate and accept a single particle at iteration `t` on its own stream.
pub fn propagate_accept(
    prev: &ParticleSet,
    model: &dyn Model,
    hook: &dyn AcceptanceHook,
    schedule: &Schedule,
    t: usize,
    particle: usize,
    opts: &PfOptions,
) -> Result<Accepted> {
    let prop = Propagator::new(prev, schedule, t)?;
    let mut rng = opts.stream(t, particle);
    prop.accept_one(model, hook, particle, &mut rng, opts.restart, opts.max_attempts)
}

/// Unnormalized log weights `ln π0(θᵢ) - ln Σⱼ wⱼ kⱼ(θᵢ)` for the current
/// particles `theta` (row-major) against the previous set.
///
/// With [`WeightDenominator::SupportCorrected`] each `kⱼ` is divided by its mass
/// on the prior support. `kernel = None` means prior proposals, giving zero log
/// weights.
pub fn reweight(
    theta: &[f64],
    prev: &ParticleSet,
    model: &dyn Model,
    kernel: Option<&GaussianKernel>,
    denominator: WeightDenominator,
    iteration: usize,
) -> Result<Vec<f64>> {
    let d = prev.dim;
    let n = theta.len() / d;
    let Some(kernel) = kernel else {
        return Ok(vec![0.0; n]);
    };
    let support = model.support();
    let sources: Vec<usize> = (0..prev.len()).filter(|&j| prev.weights[j] > 0.0).collect();
    let coef: Vec<f64> = sources
        .par_iter()
        .map(|&j| {
            let w = prev.weights[j];
            match denominator {
                WeightDenominator::Raw => w,
                WeightDenominator::SupportCorrected => w / kernel.support_mass(prev.particle(j), &support),
            }
        })
        .collect();
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("kernel support mass underflowed".into()));
    }
    let ln_coef: Vec<f64> = coef.iter().map(|c| c.ln()).collect();
    let src: Vec<f64> = sources.iter().flat_map(|&j| kernel.whiten(prev.particle(j))).collect();
    let log_norm = kernel.log_norm();

    (0..n)
        .into_par_iter()
        .map(|i| {
            let th = &theta[i * d..(i + 1) * d];
            let lp = model.prior_log_density(th);
            let u = kernel.whiten(th);
            let dist2 = |k: usize| -> f64 {
                let s = &src[k * d..(k + 1) * d];
                u.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let mut sum = 0.0;
            for (k, c) in coef.iter().enumerate() {
                sum += c * (-0.5 * dist2(k)).exp();
            }
            let log_mix = if sum > 1e-280 {
                sum.ln()
            } else {
                let terms: Vec<f64> = (0..coef.len()).map(|k| ln_coef[k] - 0.5 * dist2(k)).collect();
                crate::special::log_sum_exp(&terms)
            };
            if !log_mix.is_finite() {
                return Err(Error::WeightDegeneracy { iteration, particle: i });
            }
            Ok(lp - log_norm - log_mix)
        })
        .collect()
}

/// Normalize nonnegative weights to sum to one.
pub fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::DegenerateWeights("weights must be finite and nonnegative".into()));
    }
    let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    normalize_log(&logs)
}

/// Normalize log weights via log-sum-exp.
pub fn normalize_log(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::DegenerateWeights("log weights must be finite or -inf".into()));
    }
    let total = crate::special::log_sum_exp(log_weights);
    if total == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }
    Ok(log_weights.iter().map(|w| (w - total).exp()).collect())
}

/// One resample → propagate → reject → reweight → normalize sweep.
pub fn step(
    prev: &ParticleSet,
    model: &dyn Model,
    hook: &dyn AcceptanceHook,
    schedule: &Schedule,
    t: usize,
    opts: &PfOptions,
) -> Result<(ParticleSet, IterationDiagnostics)> {
    let start = Instant::now();
    let prop = Propagator::new(prev, schedule, t)?;
    let accepted: Vec<Accepted> = (0..opts.particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = opts.stream(t, i);
            prop.accept_one(model, hook, i, &mut rng, opts.restart, opts.max_attempts)
        })
        .collect::<Result<_>>()?;
    let mut theta = Vec::with_capacity(opts.particles * prev.dim);
    let mut summaries = Vec::with_capacity(opts.particles);
    let mut trial_counts = Vec::with_capacity(opts.particles);
    for a in accepted {
        theta.extend(a.theta);
        summaries.push(a.summaries);
        trial_counts.push(a.trials);
    }
    let log_weights = reweight(&theta, prev, model, prop.kernel(), opts.denominator, t)?;
    let weights = normalize_log(&log_weights)?;
    let total_attempts: u64 = trial_counts.iter().sum();
    let set = ParticleSet {
        iteration: t,
        dim: prev.dim,
        theta,
        summaries,
        log_weights,
        weights,
        trial_counts,
    };
    let level = prop.level();
    let diag = IterationDiagnostics {
        iteration: t,
        epsilon: level.epsilon,
        q: level.q,
        ess: set.ess(),
        mean_trials: total_attempts as f64 / opts.particles as f64,
        total_attempts,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((set, diag))
}

/// Run iterations `1..=T` from a prior initialization.
pub fn run_dp_pf(model: &dyn Model, hook: &dyn AcceptanceHook, schedule: &Schedule, opts: &PfOptions) -> Result<PfRun> {
    schedule.validate(schedule.final_epsilon())?;
    let start = Instant::now();
    let mut set = initialize(model, opts)?;
    let init_seconds = start.elapsed().as_secs_f64();
    let mut diagnostics = Vec::with_capacity(schedule.len());
    for t in 1..=schedule.len() {
        let (next, mut diag) = step(&set, model, hook, schedule, t, opts)?;
        if t == 1 {
            diag.seconds += init_seconds;
        }
        diagnostics.push(diag);
        set = next;
    }
    Ok(PfRun {
        particles: set,
        diagnostics,
    })
}
