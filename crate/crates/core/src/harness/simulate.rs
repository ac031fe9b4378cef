use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Sampler};
use super::output::{fmt_f64, opt, CsvTable};
use crate::baseline::dp_reject_abc;
use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::mechanism::{knorm_release, laplace_release, MechanismKind};
use crate::models::Model;
use crate::pf::{run_dp_pf, AcceptanceHook, KNormHook, LaplaceHook, TemperLevel};
use crate::rng::{lanes, mix_ids, RandomStream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One sampler run on one replicate of one `(ε, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub replicate: usize,
    pub epsilon: f64,
    pub n: usize,
    pub particles: usize,
    pub sampler: Sampler,
    pub status: RowStatus,
    pub s_dp: Vec<f64>,
    /// Per reported parameter; empty for failed rows.
    pub estimate: Vec<f64>,
    pub variance_hat: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub ess: Option<f64>,
    pub mean_trials: Option<f64>,
    /// Sampler time only.
    pub wall_seconds: f64,
    pub message: String,
}

impl ResultRow {
    pub fn seconds_per_ess(&self) -> Option<f64> {
        self.ess.map(|e| self.wall_seconds / e)
    }
}

/// Mean and standard deviation of each reported estimate across a cell's
/// successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub epsilon: f64,
    pub n: usize,
    pub sampler: Sampler,
    pub replicates: usize,
    pub failed: usize,
    pub params: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub mean_ess: f64,
    pub mean_trials: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub params: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<CellSummary>,
}

impl SimulateOutput {
    pub fn stalled(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Failed).count()
    }

    /// Deterministic results table (no timing columns).
    pub fn results_table(&self) -> CsvTable {
        let mut t = CsvTable::new(result_header(&self.params));
        for r in &self.rows {
            let mut row = vec![
                r.replicate.to_string(),
                fmt_f64(r.epsilon),
                r.n.to_string(),
                r.particles.to_string(),
                r.sampler.as_str().to_string(),
                match r.status {
                    RowStatus::Ok => "ok".into(),
                    RowStatus::Failed => "failed".into(),
                },
            ];
            for j in 0..self.params.len() {
                let get = |v: &Vec<f64>| opt(v.get(j).copied());
                row.extend([get(&r.estimate), get(&r.variance_hat), get(&r.ci_lower), get(&r.ci_upper)]);
            }
            row.extend([opt(r.ess), opt(r.mean_trials), r.message.clone()]);
            t.push(row);
        }
        t
    }

    /// Sampler wall time and seconds per effective sample.
    pub fn timing_table(&self) -> CsvTable {
        let header = ["replicate", "epsilon", "n", "particles", "sampler", "wall_seconds", "seconds_per_ess"];
        let mut t = CsvTable::new(header.iter().map(|s| s.to_string()).collect());
        for r in &self.rows {
            t.push(vec![
                r.replicate.to_string(),
                fmt_f64(r.epsilon),
                r.n.to_string(),
                r.particles.to_string(),
                r.sampler.as_str().to_string(),
                fmt_f64(r.wall_seconds),
                opt(r.seconds_per_ess()),
            ]);
        }
        t
    }
}

/// Column names of the results table for the given reported parameters.
pub fn result_header(params: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["replicate", "epsilon", "n", "particles", "sampler", "status"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for p in params {
        for suffix in ["estimate", "variance", "ci_lower", "ci_upper"] {
            h.push(format!("{p}_{suffix}"));
        }
    }
    h.extend(["ess", "mean_trials", "message"].iter().map(|s| s.to_string()));
    h
}

struct Job {
    epsilon: f64,
    n: usize,
    replicate: usize,
    sampler: Sampler,
}

pub(crate) fn release_hook(
    kind: MechanismKind,
    stats: &[f64],
    sensitivity: f64,
    epsilon: f64,
    rng: &mut RandomStream,
) -> Result<(Vec<f64>, Box<dyn AcceptanceHook>)> {
    Ok(match kind {
        MechanismKind::Laplace => {
            let s_dp = laplace_release(stats, sensitivity, epsilon, rng);
            (s_dp.clone(), Box::new(LaplaceHook { s_dp, sensitivity }))
        }
        MechanismKind::KnormLinf => {
            let z_dp = knorm_release(stats, sensitivity, epsilon, rng);
            (z_dp.clone(), Box::new(KNormHook { z_dp, sensitivity }))
        }
        MechanismKind::ObjectivePerturbation => {
            return Err(Error::Config("objective perturbation needs the logistic analysis".into()))
        }
    })
}

pub(crate) fn hook_for(kind: MechanismKind, s_dp: Vec<f64>, sensitivity: f64) -> Result<Box<dyn AcceptanceHook>> {
    Ok(match kind {
        MechanismKind::Laplace => Box::new(LaplaceHook { s_dp, sensitivity }),
        MechanismKind::KnormLinf => Box::new(KNormHook { z_dp: s_dp, sensitivity }),
        MechanismKind::ObjectivePerturbation => {
            return Err(Error::Config("objective perturbation needs the logistic analysis".into()))
        }
    })
}

fn run_job(cfg: &ExperimentConfig, job: &Job, report: &[usize]) -> Result<ResultRow> {
    let spec = cfg.model_with_n(job.n);
    let model: &dyn Model = spec.as_model();
    let eps_bits = job.epsilon.to_bits();
    let rep = job.replicate as u64;
    let truth = model.default_truth();
    let mut data_rng = RandomStream::new(cfg.master_seed, StreamId::new(rep, lanes::DATA, job.n as u64));
    let stats = model.simulate_summaries(&truth, &mut data_rng);
    let mut release_rng = RandomStream::new(
        cfg.master_seed,
        StreamId::new(rep, lanes::RELEASE, mix_ids(&[job.n as u64, eps_bits])),
    );
    let (s_dp, hook) = release_hook(cfg.mechanism.kind, &stats, cfg.sensitivity(), job.epsilon, &mut release_rng)?;
    let sampler_id = mix_ids(&[rep, job.n as u64, eps_bits]);
    let mut row = ResultRow {
        replicate: job.replicate,
        epsilon: job.epsilon,
        n: job.n,
        particles: cfg.particles,
        sampler: job.sampler,
        status: RowStatus::Ok,
        s_dp,
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
    let outcome = match job.sampler {
        Sampler::DpPf => {
            let schedule = cfg.schedule.build(&spec, job.epsilon, None)?;
            let opts = cfg.sampler.pf_options(cfg.particles, cfg.master_seed, sampler_id);
            run_dp_pf(model, hook.as_ref(), &schedule, &opts).and_then(|run| {
                let set = run.particles;
                let rep = EstimateReport::for_particles(&set, cfg.alpha)?;
                let trials = set.trial_counts.iter().sum::<u64>() as f64 / set.len() as f64;
                Ok((rep, trials))
            })
        }
        Sampler::DpRejectAbc => dp_reject_abc(
            model,
            hook.as_ref(),
            TemperLevel::new(job.epsilon),
            cfg.particles,
            cfg.master_seed,
            sampler_id,
            cfg.sampler.max_attempts,
        )
        .and_then(|draws| {
            let d = model.dim();
            let w = vec![1.0 / cfg.particles as f64; cfg.particles];
            let flat: Vec<f64> = draws.samples.concat();
            let rep = EstimateReport::from_columns(&w, &flat, d, cfg.alpha)?;
            let trials = draws.trial_counts.iter().sum::<u64>() as f64 / cfg.particles as f64;
            Ok((rep, trials))
        }),
    };
    row.wall_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((rep, trials)) => {
            for &j in report {
                row.estimate.push(rep.estimate[j]);
                row.variance_hat.push(rep.variance_hat[j]);
                row.ci_lower.push(rep.ci_lower[j]);
                row.ci_upper.push(rep.ci_upper[j]);
            }
            row.ess = Some(rep.ess);
            row.mean_trials = Some(trials);
        }
        Err(e) if e.is_infeasibility() => {
            row.status = RowStatus::Failed;
            row.message = e.to_string();
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn summarize(params: &[String], rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(u64, usize, &'static str), Vec<&ResultRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        let key = (r.epsilon.to_bits(), r.n, r.sampler.as_str());
        if !cells.contains_key(&key) {
            order.push(key);
        }
        cells.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &cells[&key];
            let ok: Vec<&&ResultRow> = members.iter().filter(|r| r.status == RowStatus::Ok).collect();
            let k = ok.len() as f64;
            let mut mean = Vec::new();
            let mut sd = Vec::new();
            for j in 0..params.len() {
                let vals: Vec<f64> = ok.iter().map(|r| r.estimate[j]).collect();
                let m = vals.iter().sum::<f64>() / k;
                let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
                mean.push(m);
                sd.push(v.sqrt());
            }
            CellSummary {
                epsilon: members[0].epsilon,
                n: key.1,
                sampler: members[0].sampler,
                replicates: members.len(),
                failed: members.len() - ok.len(),
                params: params.to_vec(),
                mean,
                sd,
                mean_ess: ok.iter().filter_map(|r| r.ess).sum::<f64>() / k,
                mean_trials: ok.iter().filter_map(|r| r.mean_trials).sum::<f64>() / k,
            }
        })
        .collect()
}

/// Every `(ε, n, sampler, replicate)` job of the grid. Replicates run in
/// parallel; rows come back in grid order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    let report = cfg.report_indices()?;
    let names = cfg.model.as_model().param_names();
    let params: Vec<String> = report.iter().map(|&j| names[j].clone()).collect();
    let mut jobs = Vec::new();
    for &epsilon in &cfg.epsilons {
        for &n in &cfg.ns {
            for &sampler in &cfg.samplers {
                for replicate in 0..cfg.replicates {
                    jobs.push(Job {
                        epsilon,
                        n,
                        replicate,
                        sampler,
                    });
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|job| run_job(cfg, job, &report))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&params, &rows);
    Ok(SimulateOutput { params, rows, summary })
}
