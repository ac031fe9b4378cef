//! DP-PF on the Bernoulli toy model against its exact private posterior.
//!
//! `cargo run --release --example bernoulli_oracle -- [particles] [seed]`

use dppf::baseline::{bernoulli_exact_mean, bernoulli_oracle};
use dppf::estimators::EstimateReport;
use dppf::mechanism::laplace_release;
use dppf::models::{BernoulliToy, Model};
use dppf::pf::{run_dp_pf, KernelSpec, LaplaceHook, PfOptions, Schedule};
use dppf::rng::{lanes, RandomStream, StreamId};

fn main() -> dppf::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let particles: usize = args.next().map_or(5000, |a| a.parse().expect("particles"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));
    let (n, epsilon) = (20, 1.0);

    let model = BernoulliToy::new(n);
    let mut data_rng = RandomStream::new(seed, StreamId::new(0, lanes::DATA, 0));
    let stats = model.simulate_summaries(&model.default_truth(), &mut data_rng);
    let mut release_rng = RandomStream::new(seed, StreamId::new(0, lanes::RELEASE, 0));
    let s_dp = laplace_release(&stats, model.sensitivity(), epsilon, &mut release_rng);
    println!("confidential sum {}  released {:.4}", stats[0], s_dp[0]);

    let oracle = bernoulli_oracle(n as u64, s_dp[0], epsilon, 4001)?;
    let exact = bernoulli_exact_mean(n as u64, s_dp[0], epsilon);

    let hook = LaplaceHook {
        s_dp,
        sensitivity: model.sensitivity(),
    };
    let schedule = Schedule::linear(epsilon, 4, KernelSpec::adaptive());
    let run = run_dp_pf(&model, &hook, &schedule, &PfOptions::new(particles, seed))?;
    for d in &run.diagnostics {
        println!(
            "t={} eps={:.2} ess={:.0} mean trials={:.2}",
            d.iteration, d.epsilon, d.ess, d.mean_trials
        );
    }
    let report = EstimateReport::for_particles(&run.particles, 0.05)?;
    println!("posterior mean  exact {exact:.6}  grid {:.6}", oracle.posterior_mean);
    println!(
        "DP-PF estimate {:.6}  mcse {:.6}  95% CI [{:.6}, {:.6}]",
        report.estimate[0],
        report.mcse()[0],
        report.ci_lower[0],
        report.ci_upper[0]
    );
    Ok(())
}
