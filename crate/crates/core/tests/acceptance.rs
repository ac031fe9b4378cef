//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test --release --test acceptance -- 4 5`.

use std::time::Instant;

use dppf::estimators::{ess_hat, EstimateReport};
use dppf::harness::{
    run_coverage, run_experiment, with_workers, Command, ExperimentConfig, Preset, RowStatus, Sampler,
    SimulateOutput,
};
use dppf::mechanism::{
    knorm_linf_sample, laplace_release, objective_gamma, objective_perturbation, objective_release_log_density,
    record_hessian_max_eigenvalue, residual_noise, LogisticDesign,
};
use dppf::models::{BernoulliToy, Model};
use dppf::pf::{initialize, run_dp_pf, step, KernelSpec, LaplaceHook, PfOptions, Schedule};
use dppf::rng::{lanes, mix_ids, RandomStream, StreamId};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma, Laplace};

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Flat-prior toy posterior mean: with a uniform prior every count `k` has
/// marginal mass 1/(n+1) and conditional mean (k+1)/(n+2).
fn toy_posterior_mean(n: u64, s_dp: f64, epsilon: f64) -> f64 {
    let logs: Vec<f64> = (0..=n).map(|k| -epsilon * (s_dp - k as f64).abs()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, l) in logs.iter().enumerate() {
        let w = (l - top).exp();
        num += w * (k as f64 + 1.0) / (n as f64 + 2.0);
        den += w;
    }
    num / den
}

fn toy_run(s_dp: f64, particles: usize, replicate: u64) -> EstimateReport {
    let model = BernoulliToy::new(20);
    let hook = LaplaceHook {
        s_dp: vec![s_dp],
        sensitivity: 1.0,
    };
    let schedule = Schedule::linear(1.0, 4, KernelSpec::adaptive());
    let opts = PfOptions::new(particles, SEED).replicate(replicate);
    let run = run_dp_pf(&model, &hook, &schedule, &opts).expect("toy run");
    EstimateReport::for_particles(&run.particles, 0.05).unwrap()
}

fn c1_oracle_equivalence() -> Outcome {
    let model = BernoulliToy::new(20);
    let hits: usize = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = RandomStream::new(SEED, StreamId::new(seed, lanes::DATA, 0));
            let stats = model.simulate_summaries(&model.default_truth(), &mut rng);
            let mut rng = RandomStream::new(SEED, StreamId::new(seed, lanes::RELEASE, 0));
            let s_dp = laplace_release(&stats, 1.0, 1.0, &mut rng)[0];
            let oracle = toy_posterior_mean(20, s_dp, 1.0);
            let r = toy_run(s_dp, 5000, seed);
            usize::from((r.estimate[0] - oracle).abs() <= 3.0 * r.mcse()[0])
        })
        .sum();
    outcome(hits >= 95, format!("{hits}/100 runs within 3 MCSE of the exact mean (need >= 95)"))
}

fn simulate_cell(epsilon: f64, n: usize, samplers: Vec<Sampler>) -> SimulateOutput {
    let mut cfg = ExperimentConfig::preset(Command::Simulate, Preset::Desk);
    cfg.epsilons = vec![epsilon];
    cfg.ns = vec![n];
    cfg.replicates = 30;
    cfg.samplers = samplers;
    cfg.validate(Command::Simulate).unwrap();
    run_experiment(&cfg).expect("simulate")
}

fn c2_locscale_cell() -> Outcome {
    let out = simulate_cell(2.0, 1000, vec![Sampler::DpPf]);
    let cell = &out.summary[0];
    let (mu, s2) = (cell.mean[0], cell.mean[1]);
    let pass = cell.failed == 0 && (0.97..=1.03).contains(&mu) && (0.95..=1.20).contains(&s2);
    outcome(
        pass,
        format!(
            "mean mu {mu:.4} in [0.97, 1.03], mean sigma2 {s2:.4} in [0.95, 1.20], {} failed",
            cell.failed
        ),
    )
}

fn c3_baseline_agreement() -> Outcome {
    let out = simulate_cell(1.0, 100, vec![Sampler::DpPf, Sampler::DpRejectAbc]);
    let mean = |s: Sampler| out.summary.iter().find(|c| c.sampler == s).unwrap().mean[0];
    let (pf, abc) = (mean(Sampler::DpPf), mean(Sampler::DpRejectAbc));
    let failed = out.rows.iter().filter(|r| r.status != RowStatus::Ok).count();
    outcome(
        failed == 0 && (pf - abc).abs() <= 0.1,
        format!("mu: dp-pf {pf:.4} vs dp-reject-abc {abc:.4}, |diff| {:.4} <= 0.1", (pf - abc).abs()),
    )
}

fn c4_geometric_trials() -> Outcome {
    let model = BernoulliToy::new(20);
    let hook = LaplaceHook {
        s_dp: vec![7.0],
        sensitivity: 1.0,
    };
    let schedule = Schedule::linear(1.0, 2, KernelSpec::adaptive());
    let opts = PfOptions::new(10_000, SEED);
    let init = initialize(&model, &opts).unwrap();
    let (first, _) = step(&init, &model, &hook, &schedule, 1, &opts).unwrap();
    let (set, _) = step(&first, &model, &hook, &schedule, 2, &opts).unwrap();
    let counts: Vec<f64> = set.trial_counts.iter().map(|&c| c as f64).collect();
    let n = counts.len() as f64;
    let p = n / counts.iter().sum::<f64>();

    // bins 1..K-1 plus a tail bin, each with expected count >= 5
    let mut edges = Vec::new();
    let mut k = 1u64;
    while n * p * (1.0 - p).powi(k as i32 - 1) >= 5.0 && n * (1.0 - p).powi(k as i32) >= 5.0 {
        edges.push(k);
        k += 1;
    }
    let mut chi2 = 0.0;
    for &k in &edges {
        let observed = set.trial_counts.iter().filter(|&&c| c == k).count() as f64;
        let expected = n * p * (1.0 - p).powi(k as i32 - 1);
        chi2 += (observed - expected).powi(2) / expected;
    }
    let tail = set.trial_counts.iter().filter(|&&c| c > k - 1).count() as f64;
    let expected_tail = n * (1.0 - p).powi(k as i32 - 1);
    chi2 += (tail - expected_tail).powi(2) / expected_tail;
    let df = edges.len() as f64 - 1.0;
    let critical = ChiSquared::new(df).unwrap().inverse_cdf(0.99);

    let theta = set.column(0);
    let corr = pearson(&counts, &theta);
    let bound = 4.0 / n.sqrt();
    outcome(
        chi2 <= critical && corr.abs() <= bound,
        format!(
            "p̂ {p:.4}, chi2 {chi2:.2} <= {critical:.2} (df {df}), |corr| {:.4} <= {bound}",
            corr.abs()
        ),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn c5_ess_identities() -> Outcome {
    let equal = ess_hat(&[0.37; 1000]).unwrap() == 1000.0 && ess_hat(&[1.0; 7]).unwrap() == 7.0;
    let mut point = vec![0.0; 500];
    point[123] = 4.2;
    let point_mass = ess_hat(&point).unwrap() == 1.0;
    let mut rng = RandomStream::from_parts(SEED, 5, 0, 0);
    let w: Vec<f64> = (0..1000).map(|_| rng.random::<f64>().powi(3)).collect();
    let base = ess_hat(&w).unwrap();
    let worst = [1e-150, 1e-7, 3.0, 1e9, 1e150]
        .iter()
        .map(|c| {
            let s: Vec<f64> = w.iter().map(|x| x * c).collect();
            ((ess_hat(&s).unwrap() - base) / base).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        equal && point_mass && worst <= 1e-12,
        format!("equal weights exact: {equal}, point mass exact: {point_mass}, scale drift {worst:.1e} <= 1e-12"),
    )
}

fn c6_coverage() -> Outcome {
    let mut cfg = ExperimentConfig::preset(Command::Coverage, Preset::Desk);
    cfg.coverage.particle_grid = vec![100, 2000];
    cfg.coverage.runs = 200;
    let s_dp = cfg.coverage.s_dp.clone().unwrap()[0];
    cfg.coverage.truth = Some(toy_posterior_mean(20, s_dp, cfg.coverage.epsilon));
    cfg.validate(Command::Coverage).unwrap();
    let out = run_coverage(&cfg).expect("coverage");
    let (small, large) = (&out.cells[0], &out.cells[1]);
    let pass = large.failed == 0 && (0.90..=0.99).contains(&large.coverage) && large.mean_width < small.mean_width;
    outcome(
        pass,
        format!(
            "coverage at N=2000 {:.3} in [0.90, 0.99]; mean width {:.5} (N=2000) < {:.5} (N=100)",
            large.coverage, large.mean_width, small.mean_width
        ),
    )
}

/// Kolmogorov–Smirnov statistic of `xs` against `cdf`.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

fn c7_mechanisms() -> Outcome {
    const DRAWS: usize = 100_000;
    // asymptotic KS critical value at α = 0.001
    let critical = (-(0.001f64 / 2.0).ln() / 2.0).sqrt() / (DRAWS as f64).sqrt();
    let mut rng = RandomStream::from_parts(SEED, 7, 0, 0);
    let mut lines = Vec::new();
    let mut pass = true;
    for (d, c) in [(2usize, 1.5f64), (4, 0.5)] {
        let norms: Vec<f64> = (0..DRAWS)
            .map(|_| knorm_linf_sample(c, d, &mut rng).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let g = Gamma::new(d as f64, c).unwrap();
        let ks = ks_statistic(norms, |x| g.cdf(x));
        pass &= ks <= critical;
        lines.push(format!("K-norm d={d} KS {ks:.4}"));
    }
    let c = 0.8;
    let draws: Vec<f64> = (0..DRAWS).map(|_| knorm_linf_sample(c, 1, &mut rng)[0]).collect();
    let lap = Laplace::new(0.0, 1.0 / c).unwrap();
    let ks = ks_statistic(draws, |x| lap.cdf(x));
    pass &= ks <= critical;
    lines.push(format!("d=1 vs Laplace KS {ks:.4}"));

    let (sens, eps) = (3.0, 0.7);
    let noise: Vec<f64> = (0..DRAWS).map(|_| laplace_release(&[0.0], sens, eps, &mut rng)[0]).collect();
    let sq: Vec<f64> = noise.iter().map(|x| x * x).collect();
    let var = sq.iter().sum::<f64>() / DRAWS as f64;
    let sd_sq = (sq.iter().map(|s| (s - var).powi(2)).sum::<f64>() / (DRAWS as f64 - 1.0)).sqrt();
    let mc = sd_sq / (DRAWS as f64).sqrt();
    let target = 2.0 * (sens / eps).powi(2);
    pass &= (var - target).abs() <= 3.0 * mc;
    lines.push(format!("Laplace variance {var:.3} vs {target:.3} (3 MC err {:.3})", 3.0 * mc));
    outcome(pass, format!("{} (KS critical {critical:.4})", lines.join(", ")))
}

fn random_design(n: usize, rng: &mut RandomStream) -> LogisticDesign {
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
    LogisticDesign::with_intercept(&z, &y).unwrap()
}

fn c8_objective_perturbation() -> Outcome {
    let mut rng = RandomStream::from_parts(SEED, 8, 0, 0);
    let (sens, eps, q) = (2.0, 1.0, 0.5);

    let mut recovery = 0.0f64;
    for n in [5, 50, 500] {
        for _ in 0..20 {
            let design = random_design(n, &mut rng);
            let (theta, v) = objective_perturbation(&design, sens, eps, q, &mut rng).unwrap();
            let gamma = objective_gamma(design.dim() as f64 / 4.0, eps, q);
            let back = residual_noise(&design, &theta, gamma);
            let err = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            recovery = recovery.max(err);
        }
    }

    let mut worst_ratio = f64::NEG_INFINITY;
    for _ in 0..20 {
        let design = random_design(5, &mut rng);
        for &(z, y) in &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0)] {
            let mut other = design.clone();
            other.set_row(0, &[1.0, z], y);
            for i in 0..41 {
                for j in 0..41 {
                    let theta = [-4.0 + 0.2 * i as f64, -4.0 + 0.2 * j as f64];
                    let a = objective_release_log_density(&theta, &design, sens, eps, q).unwrap();
                    let b = objective_release_log_density(&theta, &other, sens, eps, q).unwrap();
                    worst_ratio = worst_ratio.max((a - b).abs());
                }
            }
        }
    }
    let ratio_bound = eps + (1e-6f64).ln_1p();

    let mut hess = 0.0f64;
    for _ in 0..10_000 {
        let row = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let theta = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        hess = hess.max(record_hessian_max_eigenvalue(&row, &theta));
    }
    let pass = recovery <= 1e-5 && worst_ratio <= ratio_bound && hess <= 0.5;
    outcome(
        pass,
        format!(
            "V recovery {recovery:.1e} <= 1e-5; max log density ratio {worst_ratio:.4} <= {ratio_bound:.6}; \
             max record eigenvalue {hess:.4} <= d/4 = 0.5"
        ),
    )
}

fn c9_rate() -> Outcome {
    let s_dp = 7.0;
    let oracle = toy_posterior_mean(20, s_dp, 1.0);
    let grid = [100usize, 1000, 10_000];
    let medians: Vec<f64> = grid
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = (0..50u64)
                .into_par_iter()
                .map(|seed| (toy_run(s_dp, n, mix_ids(&[seed, n as u64])).estimate[0] - oracle).abs())
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[24] + errs[25])
        })
        .collect();
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(
        (-0.7..=-0.3).contains(&slope),
        format!("median errors {medians:.5?}, slope {slope:.3} in [-0.7, -0.3]"),
    )
}

fn c10_determinism() -> Outcome {
    let mut sim = ExperimentConfig::preset(Command::Simulate, Preset::Desk);
    sim.replicates = 4;
    sim.ns = vec![100];
    sim.particles = 100;
    sim.samplers = vec![Sampler::DpPf, Sampler::DpRejectAbc];
    let mut cov = ExperimentConfig::preset(Command::Coverage, Preset::Desk);
    cov.coverage.particle_grid = vec![50, 200];
    cov.coverage.runs = 10;

    let tables = |workers: usize| -> Vec<Vec<u8>> {
        with_workers(Some(workers), || {
            let s = run_experiment(&sim).unwrap();
            let c = run_coverage(&cov).unwrap();
            vec![
                s.results_table().to_bytes().unwrap(),
                c.cell_table().to_bytes().unwrap(),
                c.run_table().to_bytes().unwrap(),
            ]
        })
        .unwrap()
    };
    let (one, two, again) = (tables(1), tables(2), tables(2));
    let identical = one == two && two == again;
    outcome(
        identical,
        format!(
            "results, coverage and per-run CSVs identical across workers 1/2/2 ({} bytes)",
            one.iter().map(Vec::len).sum::<usize>()
        ),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 10] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("location-scale desk cell", c2_locscale_cell),
        ("baseline agreement", c3_baseline_agreement),
        ("geometric trial law", c4_geometric_trials),
        ("ESS identities", c5_ess_identities),
        ("CI coverage", c6_coverage),
        ("mechanism distributions", c7_mechanisms),
        ("objective perturbation", c8_objective_perturbation),
        ("convergence rate", c9_rate),
        ("determinism", c10_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:2} {verdict} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
