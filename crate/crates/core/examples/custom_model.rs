//! Plugging a new model into the sampler: Poisson counts with a gamma prior,
//! released as a clamped mean through the K-norm mechanism.

use dppf::dist::DistributionSpec;
use dppf::estimators::EstimateReport;
use dppf::mechanism::{knorm_release, ClampSpec};
use dppf::models::{Interval, Model, SyntheticData};
use dppf::pf::{run_dp_pf, KNormHook, KernelSpec, PfOptions, Schedule};
use dppf::rng::RandomStream;
use rand::RngCore;
use rand_distr::{Distribution, Poisson};

struct PoissonCounts {
    n: usize,
    prior: DistributionSpec,
    clamp: ClampSpec,
}

impl Model for PoissonCounts {
    fn name(&self) -> &str {
        "poisson-counts"
    }

    fn dim(&self) -> usize {
        1
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        vec!["rate".into()]
    }

    fn support(&self) -> Vec<Interval> {
        vec![Interval::POSITIVE]
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.prior.sample(rng).expect("valid prior")
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta).unwrap_or(f64::NEG_INFINITY)
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        let pois = Poisson::new(theta[0].max(1e-12)).expect("positive rate");
        let raw: Vec<f64> = (0..self.n).map(|_| pois.sample(rng)).collect();
        let summaries = self.summary_stats(&raw);
        SyntheticData { raw, ncols: 1, summaries }
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        vec![raw.iter().map(|&x| self.clamp.apply(x)).sum::<f64>() / raw.len() as f64]
    }

    // one record moves the clamped mean by at most 2/n
    fn sensitivity(&self) -> f64 {
        2.0 / self.n as f64
    }

    fn default_truth(&self) -> Vec<f64> {
        vec![3.0]
    }
}

fn main() -> dppf::error::Result<()> {
    let model = PoissonCounts {
        n: 200,
        prior: DistributionSpec::Gamma { shape: 2.0, rate: 0.5 },
        clamp: ClampSpec::new(0.0, 10.0)?,
    };
    let epsilon = 1.0;
    let mut rng = RandomStream::from_parts(21, 0, 0, 0);
    let data = model.simulate_data(&model.default_truth(), &mut rng);
    let z_dp = knorm_release(&data.summaries, model.sensitivity(), epsilon, &mut rng);
    let hook = KNormHook {
        z_dp,
        sensitivity: model.sensitivity(),
    };
    let schedule = Schedule::linear(epsilon, 4, KernelSpec::adaptive());
    let run = run_dp_pf(&model, &hook, &schedule, &PfOptions::new(1000, 21))?;
    let report = EstimateReport::for_particles(&run.particles, 0.05)?;
    println!(
        "rate: truth 3.0, estimate {:.3}, 95% CI [{:.3}, {:.3}], ESS {:.0}",
        report.estimate[0], report.ci_lower[0], report.ci_upper[0], report.ess
    );
    Ok(())
}
