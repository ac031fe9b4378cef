//! DP-PF and exact rejection sampling on the same private release.

use dppf::baseline::dp_reject_abc;
use dppf::estimators::EstimateReport;
use dppf::mechanism::laplace_release;
use dppf::models::{LocScaleNormal, Model};
use dppf::pf::{run_dp_pf, LaplaceHook, PfOptions, Schedule, TemperLevel};
use dppf::rng::{lanes, RandomStream, StreamId};

fn main() -> dppf::error::Result<()> {
    let (n, epsilon, particles, seed) = (100, 1.0, 500, 11);
    let model = LocScaleNormal::new(n);
    let mut rng = RandomStream::new(seed, StreamId::new(0, lanes::DATA, 0));
    let stats = model.simulate_summaries(&model.default_truth(), &mut rng);
    let mut rng = RandomStream::new(seed, StreamId::new(0, lanes::RELEASE, 0));
    let s_dp = laplace_release(&stats, model.sensitivity(), epsilon, &mut rng);
    println!("clamped summaries {stats:.4?}\nreleased {s_dp:.4?}");
    let hook = LaplaceHook {
        s_dp,
        sensitivity: model.sensitivity(),
    };

    let pf = run_dp_pf(&model, &hook, &Schedule::locscale(epsilon), &PfOptions::new(particles, seed))?;
    let report = EstimateReport::for_particles(&pf.particles, 0.05)?;
    let pf_trials: u64 = pf.diagnostics.iter().map(|d| d.total_attempts).sum();

    let abc = dp_reject_abc(&model, &hook, TemperLevel::new(epsilon), particles, seed, 0, 10_000_000)?;
    let abc_trials: u64 = abc.trial_counts.iter().sum();

    for (j, name) in model.param_names().iter().enumerate() {
        let (m, se) = abc.mean_and_se(j);
        println!(
            "{name:7} dp-pf {:.4} ({:.4})   reject-abc {m:.4} ({se:.4})",
            report.estimate[j],
            report.mcse()[j]
        );
    }
    println!("simulations: dp-pf {pf_trials}, reject-abc {abc_trials}");
    Ok(())
}
