use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, opt, CsvTable};
use super::simulate::{hook_for, release_hook};
use crate::baseline::bernoulli_exact_mean;
use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::models::ModelSpec;
use crate::pf::run_dp_pf;
use crate::rng::{lanes, mix_ids, RandomStream, StreamId};

/// One PF run at a fixed release.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRun {
    pub particles: usize,
    pub run: usize,
    pub estimate: Option<f64>,
    pub variance_hat: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub ess: Option<f64>,
    pub covered: Option<bool>,
}

impl CoverageRun {
    pub fn width(&self) -> Option<f64> {
        Some(self.ci_upper? - self.ci_lower?)
    }
}

/// Coverage fraction and mean interval width at one particle count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub particles: usize,
    pub runs: usize,
    pub failed: usize,
    pub coverage: f64,
    pub mean_width: f64,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageOutput {
    pub s_dp: Vec<f64>,
    pub truth: f64,
    pub coordinate: usize,
    pub cells: Vec<CoverageCell>,
    pub runs: Vec<CoverageRun>,
}

impl CoverageOutput {
    pub fn stalled(&self) -> usize {
        self.cells.iter().map(|c| c.failed).sum()
    }

    pub fn cell_table(&self) -> CsvTable {
        let header = ["particles", "runs", "failed", "coverage", "mean_width", "mean_abs_error"];
        let mut t = CsvTable::new(header.iter().map(|s| s.to_string()).collect());
        for c in &self.cells {
            t.push(vec![
                c.particles.to_string(),
                c.runs.to_string(),
                c.failed.to_string(),
                fmt_f64(c.coverage),
                fmt_f64(c.mean_width),
                fmt_f64(c.mean_abs_error),
            ]);
        }
        t
    }

    pub fn run_table(&self) -> CsvTable {
        let header = ["particles", "run", "estimate", "variance", "ci_lower", "ci_upper", "ess", "covered"];
        let mut t = CsvTable::new(header.iter().map(|s| s.to_string()).collect());
        for r in &self.runs {
            t.push(vec![
                r.particles.to_string(),
                r.run.to_string(),
                opt(r.estimate),
                opt(r.variance_hat),
                opt(r.ci_lower),
                opt(r.ci_upper),
                opt(r.ess),
                r.covered.map(|c| u8::from(c).to_string()).unwrap_or_default(),
            ]);
        }
        t
    }
}

/// Repeated PF runs at a fixed `s_dp` for every particle count in the grid.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageOutput> {
    let c = &cfg.coverage;
    let model = cfg.model.as_model();
    let sensitivity = cfg.sensitivity();
    let n = model.n();
    let s_dp = match &c.s_dp {
        Some(s) => s.clone(),
        None => {
            let mut data = RandomStream::new(cfg.master_seed, StreamId::new(0, lanes::DATA, n as u64));
            let stats = model.simulate_summaries(&model.default_truth(), &mut data);
            let mut rel = RandomStream::new(cfg.master_seed, StreamId::new(0, lanes::RELEASE, n as u64));
            release_hook(cfg.mechanism.kind, &stats, sensitivity, c.epsilon, &mut rel)?.0
        }
    };
    let truth = match (c.truth, &cfg.model) {
        (Some(t), _) => t,
        (None, ModelSpec::BernoulliToy(_)) => bernoulli_exact_mean(n as u64, s_dp[0], c.epsilon),
        _ => return Err(Error::Config("coverage needs a truth for this model".into())),
    };
    let hook = hook_for(cfg.mechanism.kind, s_dp.clone(), sensitivity)?;
    let schedule = cfg.schedule.build(&cfg.model, c.epsilon, None)?;
    let jobs: Vec<(usize, usize)> = c
        .particle_grid
        .iter()
        .flat_map(|&p| (0..c.runs).map(move |r| (p, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(particles, run)| {
            let opts = cfg
                .sampler
                .pf_options(particles, cfg.master_seed, mix_ids(&[run as u64, particles as u64]));
            let mut out = CoverageRun {
                particles,
                run,
                estimate: None,
                variance_hat: None,
                ci_lower: None,
                ci_upper: None,
                ess: None,
                covered: None,
            };
            match run_dp_pf(model, hook.as_ref(), &schedule, &opts) {
                Ok(res) => {
                    let rep = EstimateReport::for_particles(&res.particles, cfg.alpha)?;
                    let j = c.coordinate;
                    out.estimate = Some(rep.estimate[j]);
                    out.variance_hat = Some(rep.variance_hat[j]);
                    out.ci_lower = Some(rep.ci_lower[j]);
                    out.ci_upper = Some(rep.ci_upper[j]);
                    out.ess = Some(rep.ess);
                    out.covered = Some(rep.ci_lower[j] <= truth && truth <= rep.ci_upper[j]);
                }
                Err(e) if e.is_infeasibility() => {}
                Err(e) => return Err(e),
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = c
        .particle_grid
        .iter()
        .map(|&p| {
            let ok: Vec<&CoverageRun> = runs.iter().filter(|r| r.particles == p && r.covered.is_some()).collect();
            let k = ok.len() as f64;
            CoverageCell {
                particles: p,
                runs: c.runs,
                failed: c.runs - ok.len(),
                coverage: ok.iter().filter(|r| r.covered == Some(true)).count() as f64 / k,
                mean_width: ok.iter().filter_map(|r| r.width()).sum::<f64>() / k,
                mean_abs_error: ok.iter().filter_map(|r| r.estimate).map(|e| (e - truth).abs()).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(CoverageOutput {
        s_dp,
        truth,
        coordinate: c.coordinate,
        cells,
        runs,
    })
}
