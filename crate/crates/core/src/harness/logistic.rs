use std::time::Instant;

use rand::RngCore;
use serde::Serialize;
use statrs::function::gamma::digamma;

use super::config::ExperimentConfig;
use super::output::{opt, CsvTable};
use super::simulate::RowStatus;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::mechanism::{logistic_hessian, perturbed_minimizer, NewtonOptions};
use crate::models::{synthesize_census_like, CensusLike, LogisticBeta, LogisticReleaseHook, Model, ModelSpec};
use crate::pf::{normalize_log, run_dp_pf};
use crate::resample::Categorical;
use crate::rng::{lanes, mix_ids, RandomStream, StreamId};
use crate::special::ln_gamma;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticRun {
    pub run: usize,
    pub status: RowStatus,
    /// `(θ_dp, z_dp)`; empty without privacy.
    pub s_dp: Vec<f64>,
    pub estimate: Vec<f64>,
    pub variance_hat: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub ess: Option<f64>,
    pub mean_trials: Option<f64>,
    pub wall_seconds: f64,
    pub message: String,
}

/// Pointwise envelope and mean of a set of logistic curves on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBand {
    pub z: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mean: Vec<f64>,
    pub curves_kept: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogisticOutput {
    pub private: bool,
    pub params: Vec<String>,
    pub runs: Vec<LogisticRun>,
    /// Band of the first successful run.
    pub band: Option<CurveBand>,
}

impl LogisticOutput {
    pub fn stalled(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RowStatus::Failed).count()
    }

    pub fn run_table(&self) -> CsvTable {
        let mut header: Vec<String> = vec!["run".into(), "status".into()];
        for k in 0..4 {
            header.push(format!("s_dp_{k}"));
        }
        for p in &self.params {
            for suffix in ["estimate", "variance", "ci_lower", "ci_upper"] {
                header.push(format!("{p}_{suffix}"));
            }
        }
        header.extend(["ess", "mean_trials", "message"].iter().map(|s| s.to_string()));
        let mut t = CsvTable::new(header);
        for r in &self.runs {
            let mut row = vec![
                r.run.to_string(),
                match r.status {
                    RowStatus::Ok => "ok".into(),
                    RowStatus::Failed => "failed".into(),
                },
            ];
            row.extend((0..4).map(|k| opt(r.s_dp.get(k).copied())));
            for j in 0..self.params.len() {
                let get = |v: &Vec<f64>| opt(v.get(j).copied());
                row.extend([get(&r.estimate), get(&r.variance_hat), get(&r.ci_lower), get(&r.ci_upper)]);
            }
            row.extend([opt(r.ess), opt(r.mean_trials), r.message.clone()]);
            t.push(row);
        }
        t
    }

    /// Mean posterior estimates over successful runs.
    pub fn mean_estimate(&self) -> Vec<f64> {
        let ok: Vec<&LogisticRun> = self.runs.iter().filter(|r| r.status == RowStatus::Ok).collect();
        (0..self.params.len())
            .map(|j| ok.iter().map(|r| r.estimate[j]).sum::<f64>() / ok.len() as f64)
            .collect()
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn log_likelihood_beta(data: &CensusLike, b0: f64, b1: f64) -> f64 {
    data.age
        .iter()
        .zip(&data.retired)
        .map(|(z, y)| {
            let eta = b0 + b1 * z;
            // ln(1 + e^η) without overflow
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            y * eta - softplus
        })
        .sum()
}

struct BetaMoments {
    n: f64,
    sum_ln_z: f64,
    sum_ln_1mz: f64,
}

impl BetaMoments {
    fn new(z: &[f64]) -> Self {
        let tiny = f64::MIN_POSITIVE;
        Self {
            n: z.len() as f64,
            sum_ln_z: z.iter().map(|v| v.max(tiny).ln()).sum(),
            sum_ln_1mz: z.iter().map(|v| (1.0 - v).max(tiny).ln()).sum(),
        }
    }

    fn log_likelihood(&self, a: f64, b: f64) -> f64 {
        self.n * (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)) + (a - 1.0) * self.sum_ln_z + (b - 1.0) * self.sum_ln_1mz
    }
}

fn trigamma(x: f64) -> f64 {
    let h = 1e-5 * x.max(1.0);
    (digamma(x + h) - digamma(x - h)) / (2.0 * h)
}

/// Posterior mode and negative Hessian of the Beta shape parameters under
/// independent Gamma priors.
fn beta_shape_mode(m: &BetaMoments, shape: f64, rate: f64, z: &[f64]) -> Result<([f64; 2], [f64; 4])> {
    let mean = z.iter().sum::<f64>() / m.n;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m.n;
    let k = (mean * (1.0 - mean) / var.max(1e-12) - 1.0).max(0.1);
    let mut x = [mean.clamp(0.01, 0.99) * k, (1.0 - mean).clamp(0.01, 0.99) * k];
    let logp = |a: f64, b: f64| {
        if a <= 0.0 || b <= 0.0 {
            f64::NEG_INFINITY
        } else {
            m.log_likelihood(a, b) + (shape - 1.0) * (a.ln() + b.ln()) - rate * (a + b)
        }
    };
    let neg_hess = |a: f64, b: f64| {
        let tab = trigamma(a + b);
        let haa = m.n * (trigamma(a) - tab) + (shape - 1.0) / (a * a);
        let hbb = m.n * (trigamma(b) - tab) + (shape - 1.0) / (b * b);
        let hab = -m.n * tab;
        [haa, hab, hab, hbb]
    };
    for _ in 0..200 {
        let (a, b) = (x[0], x[1]);
        let dab = digamma(a + b);
        let g = [
            m.n * (dab - digamma(a)) + m.sum_ln_z + (shape - 1.0) / a - rate,
            m.n * (dab - digamma(b)) + m.sum_ln_1mz + (shape - 1.0) / b - rate,
        ];
        if g[0].abs().max(g[1].abs()) < 1e-8 * m.n.max(1.0) {
            return Ok((x, neg_hess(a, b)));
        }
        let h = neg_hess(a, b);
        let det = h[0] * h[3] - h[1] * h[2];
        let step = if det > 0.0 && h[0] > 0.0 {
            [(h[3] * g[0] - h[1] * g[1]) / det, (h[0] * g[1] - h[2] * g[0]) / det]
        } else {
            [g[0] * 1e-3, g[1] * 1e-3]
        };
        let f0 = logp(a, b);
        let mut t = 1.0;
        loop {
            let cand = [a + t * step[0], b + t * step[1]];
            if logp(cand[0], cand[1]) >= f0 || t < 1e-12 {
                x = cand;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::Optimization {
        iterations: 200,
        grad_norm: f64::NAN,
    })
}

fn inverse_2x2(h: &[f64]) -> Vec<Vec<f64>> {
    let det = h[0] * h[3] - h[1] * h[2];
    vec![vec![h[3] / det, -h[1] / det], vec![-h[2] / det, h[0] / det]]
}

/// Non-private posterior of `(β0, β1, a, b)` by self-normalized importance
/// sampling from an inflated Laplace approximation. Returns normalized
/// weights and row-major draws.
pub fn nonprivate_posterior(
    model: &LogisticBeta,
    data: &CensusLike,
    draws: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, Vec<f64>)> {
    const INFLATE: f64 = 1.5;
    let design = data.design();
    let gamma = 1.0 / model.beta_var;
    let beta_hat = perturbed_minimizer(&design, gamma, &[0.0, 0.0], NewtonOptions::default())?;
    let mut hb = logistic_hessian(&design, &beta_hat);
    hb[0] += gamma;
    hb[3] += gamma;
    let moments = BetaMoments::new(&data.age);
    let (ab_hat, hab) = beta_shape_mode(&moments, model.ab_shape, model.ab_rate, &data.age)?;
    let scale = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        m.into_iter().map(|r| r.into_iter().map(|v| v * INFLATE * INFLATE).collect()).collect()
    };
    let qb = DistributionSpec::multivariate_normal(beta_hat.clone(), scale(inverse_2x2(&hb)))?;
    let qab = DistributionSpec::multivariate_normal(ab_hat.to_vec(), scale(inverse_2x2(&hab)))?;
    let mut points = Vec::with_capacity(4 * draws);
    let mut log_w = Vec::with_capacity(draws);
    for _ in 0..draws {
        let b = qb.sample(rng)?;
        let ab = qab.sample(rng)?;
        let theta = [b[0], b[1], ab[0], ab[1]];
        let lw = if ab[0] > 0.0 && ab[1] > 0.0 {
            model.prior_log_density(&theta) + log_likelihood_beta(data, b[0], b[1]) + moments.log_likelihood(ab[0], ab[1])
                - qb.log_density(&b)?
                - qab.log_density(&ab)?
        } else {
            f64::NEG_INFINITY
        };
        points.extend(theta);
        log_w.push(lw);
    }
    Ok((normalize_log(&log_w)?, points))
}

/// Sample `weights`-distributed curves, keep the `central` fraction closest
/// in Mahalanobis distance to the coordinatewise median of `(β0, β1)`, and
/// summarize them on a grid of `points` covariate values.
pub fn central_curve_band(
    weights: &[f64],
    theta: &[f64],
    dim: usize,
    central: f64,
    points: usize,
    rng: &mut dyn RngCore,
) -> Result<CurveBand> {
    let cat = Categorical::new(weights)?;
    let m = weights.len();
    let draws: Vec<[f64; 2]> = (0..m)
        .map(|_| {
            let i = cat.sample(rng);
            [theta[i * dim], theta[i * dim + 1]]
        })
        .collect();
    let median = |k: usize| {
        let mut v: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        v.sort_by(f64::total_cmp);
        if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) }
    };
    let med = [median(0), median(1)];
    let mean = [
        draws.iter().map(|d| d[0]).sum::<f64>() / m as f64,
        draws.iter().map(|d| d[1]).sum::<f64>() / m as f64,
    ];
    let mut cov = [0.0; 4];
    for d in &draws {
        let e = [d[0] - mean[0], d[1] - mean[1]];
        cov[0] += e[0] * e[0];
        cov[1] += e[0] * e[1];
        cov[3] += e[1] * e[1];
    }
    cov[2] = cov[1];
    let denom = (m as f64 - 1.0).max(1.0);
    cov.iter_mut().for_each(|c| *c /= denom);
    cov[0] += 1e-12;
    cov[3] += 1e-12;
    let inv = inverse_2x2(&cov);
    let mut ranked: Vec<(f64, usize)> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let e = [d[0] - med[0], d[1] - med[1]];
            let q = e[0] * (inv[0][0] * e[0] + inv[0][1] * e[1]) + e[1] * (inv[1][0] * e[0] + inv[1][1] * e[1]);
            (q, i)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let keep = ((central * m as f64).ceil() as usize).clamp(1, m);
    let kept: Vec<[f64; 2]> = ranked[..keep].iter().map(|&(_, i)| draws[i]).collect();
    let z: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let mut band = CurveBand {
        lower: Vec::with_capacity(points),
        upper: Vec::with_capacity(points),
        mean: Vec::with_capacity(points),
        z: z.clone(),
        curves_kept: keep,
    };
    for &zk in &z {
        let vals = kept.iter().map(|b| sigmoid(b[0] + b[1] * zk));
        let (lo, hi, s) = vals.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), v| {
            (lo.min(v), hi.max(v), s + v)
        });
        band.lower.push(lo);
        band.upper.push(hi);
        band.mean.push(s / keep as f64);
    }
    Ok(band)
}

impl CurveBand {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.z.len())
            .map(|k| vec![self.z[k], self.lower[k], self.upper[k], self.mean[k]])
            .collect()
    }
}

/// Seeded runs of the logistic analysis on synthetic census-like data.
pub fn run_logistic_analysis(cfg: &ExperimentConfig) -> Result<LogisticOutput> {
    let l = &cfg.logistic;
    let spec = cfg.model_with_n(l.n);
    let ModelSpec::LogisticBeta(model) = &spec else {
        return Err(Error::Config("the logistic analysis needs the logistic-beta model".into()));
    };
    let params = model.param_names();
    let mut runs = Vec::with_capacity(l.runs);
    let mut band = None;
    for run in 0..l.runs {
        let rep = run as u64;
        let mut data_rng = RandomStream::new(cfg.master_seed, StreamId::new(rep, lanes::DATA, l.n as u64));
        let data = synthesize_census_like(l.n, &mut data_rng);
        let mut report_rng = RandomStream::new(cfg.master_seed, StreamId::new(rep, lanes::REPORT, 0));
        let mut out = LogisticRun {
            run,
            status: RowStatus::Ok,
            s_dp: Vec::new(),
            estimate: Vec::new(),
            variance_hat: Vec::new(),
            ci_lower: Vec::new(),
            ci_upper: Vec::new(),
            ess: None,
            mean_trials: None,
            wall_seconds: 0.0,
            message: String::new(),
        };
        let start = Instant::now();
        let result = if l.private {
            let mut release_rng = RandomStream::new(cfg.master_seed, StreamId::new(rep, lanes::RELEASE, l.n as u64));
            let mut hook = LogisticReleaseHook::release(&data, l.epsilon, l.q, l.share, l.sensitivity, &mut release_rng)?;
            hook.convention = cfg.mechanism.convention;
            out.s_dp = hook.s_dp();
            let schedule = cfg.schedule.build(&spec, l.epsilon, Some(l.q))?;
            let opts = cfg.sampler.pf_options(
                l.particles,
                cfg.master_seed,
                mix_ids(&[rep, l.n as u64, l.epsilon.to_bits()]),
            );
            run_dp_pf(model, &hook, &schedule, &opts).map(|r| {
                let set = r.particles;
                let trials = set.trial_counts.iter().sum::<u64>() as f64 / set.len() as f64;
                (set.weights, set.theta, Some(trials))
            })
        } else {
            nonprivate_posterior(model, &data, l.particles, &mut report_rng).map(|(w, p)| (w, p, None))
        };
        out.wall_seconds = start.elapsed().as_secs_f64();
        match result {
            Ok((weights, theta, trials)) => {
                let rep = EstimateReport::from_columns(&weights, &theta, 4, cfg.alpha)?;
                out.estimate = rep.estimate;
                out.variance_hat = rep.variance_hat;
                out.ci_lower = rep.ci_lower;
                out.ci_upper = rep.ci_upper;
                out.ess = Some(rep.ess);
                out.mean_trials = trials;
                if band.is_none() {
                    band = Some(central_curve_band(&weights, &theta, 4, l.central, l.curve_points, &mut report_rng)?);
                }
            }
            Err(e) if e.is_infeasibility() => {
                out.status = RowStatus::Failed;
                out.message = e.to_string();
            }
            Err(e) => return Err(e),
        }
        runs.push(out);
    }
    Ok(LogisticOutput {
        private: l.private,
        params,
        runs,
        band,
    })
}

