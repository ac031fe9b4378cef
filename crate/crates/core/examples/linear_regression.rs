//! Non-conjugate linear regression with a Laplace release of five clamped
//! moments.
//!
//! `cargo run --release --example linear_regression -- [n] [epsilon] [particles] [adaptive|fixed]`
//!
//! `fixed` keeps the preset's pre-specified geometric kernel scales.

use dppf::estimators::EstimateReport;
use dppf::mechanism::laplace_release;
use dppf::models::{LinRegNonConjugate, Model};
use dppf::pf::{run_dp_pf, KernelSpec, LaplaceHook, PfOptions, Schedule};
use dppf::rng::{lanes, RandomStream, StreamId};

fn main() -> dppf::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(100, |a| a.parse().expect("n"));
    let epsilon: f64 = args.next().map_or(1.0, |a| a.parse().expect("epsilon"));
    let particles: usize = args.next().map_or(200, |a| a.parse().expect("particles"));
    let adaptive = args.next().is_none_or(|a| a == "adaptive");
    let seed = 5;

    let model = LinRegNonConjugate::new(n);
    let mut rng = RandomStream::new(seed, StreamId::new(0, lanes::DATA, 0));
    let data = model.simulate_data(&model.default_truth(), &mut rng);
    let mut rng = RandomStream::new(seed, StreamId::new(0, lanes::RELEASE, 0));
    let s_dp = laplace_release(&data.summaries, model.sensitivity(), epsilon, &mut rng);
    println!("summaries {:.4?}\nreleased  {s_dp:.4?}", data.summaries);

    let hook = LaplaceHook {
        s_dp,
        sensitivity: model.sensitivity(),
    };
    let mut schedule = Schedule::regression(epsilon);
    if adaptive {
        schedule.kernel = KernelSpec::adaptive();
    }
    let run = run_dp_pf(&model, &hook, &schedule, &PfOptions::new(particles, seed))?;
    for d in &run.diagnostics {
        println!("t={:2} eps={:.3} ess={:6.1} trials={:8.1} {:.2}s", d.iteration, d.epsilon, d.ess, d.mean_trials, d.seconds);
    }
    let report = EstimateReport::for_particles(&run.particles, 0.05)?;
    let truth = model.default_truth();
    for (j, name) in model.param_names().iter().enumerate() {
        println!(
            "{name:5} truth {:7.3}  estimate {:7.3}  CI [{:7.3}, {:7.3}]",
            truth[j], report.estimate[j], report.ci_lower[j], report.ci_upper[j]
        );
    }
    Ok(())
}
