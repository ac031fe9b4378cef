use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{check_dim, positive_param, require, Interval, Model, SyntheticData};
use crate::dist::DistributionSpec;
use crate::error::Result;

/// `x ~ Bernoulli(θ)^n`, `θ ~ Beta(a, b)` (flat by default), summary `Σx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernoulliToy {
    pub n: usize,
    pub prior_a: f64,
    pub prior_b: f64,
    pub truth: f64,
}

impl Default for BernoulliToy {
    fn default() -> Self {
        Self {
            n: 20,
            prior_a: 1.0,
            prior_b: 1.0,
            truth: 0.5,
        }
    }
}

impl BernoulliToy {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n >= 1, || "bernoulli-toy needs n >= 1".into())?;
        positive_param("prior_a", self.prior_a)?;
        positive_param("prior_b", self.prior_b)?;
        require((0.0..=1.0).contains(&self.truth), || "truth must lie in [0, 1]".into())
    }

    fn prior(&self) -> DistributionSpec {
        if self.prior_a == 1.0 && self.prior_b == 1.0 {
            DistributionSpec::Uniform { low: 0.0, high: 1.0 }
        } else {
            DistributionSpec::Beta {
                a: self.prior_a,
                b: self.prior_b,
            }
        }
    }
}

impl Model for BernoulliToy {
    fn name(&self) -> &str {
        "bernoulli-toy"
    }

    fn dim(&self) -> usize {
        1
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn support(&self) -> Vec<Interval> {
        vec![Interval::UNIT]
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.prior().sample(rng).expect("validated prior")
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        check_dim(theta, 1);
        self.prior().log_density(theta).expect("dimension checked")
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        check_dim(theta, 1);
        let raw: Vec<f64> = (0..self.n)
            .map(|_| f64::from(u8::from(rng.random::<f64>() < theta[0])))
            .collect();
        let summaries = self.summary_stats(&raw);
        SyntheticData { raw, ncols: 1, summaries }
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        vec![raw.iter().sum()]
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        check_dim(theta, 1);
        let p = theta[0].clamp(0.0, 1.0);
        let k = Binomial::new(self.n as u64, p).expect("p in [0, 1]").sample(rng);
        vec![k as f64]
    }

    fn sensitivity(&self) -> f64 {
        1.0
    }

    fn default_truth(&self) -> Vec<f64> {
        vec![self.truth]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn count_summary() {
        let m = BernoulliToy::new(3);
        assert_eq!(m.summary_stats(&[1.0, 0.0, 1.0]), vec![2.0]);
    }

    #[test]
    fn flat_prior() {
        let m = BernoulliToy::new(5);
        assert_eq!(m.prior_log_density(&[0.3]), 0.0);
        assert_eq!(m.prior_log_density(&[1.3]), f64::NEG_INFINITY);
        let mut rng = RandomStream::from_parts(0, 0, 0, 0);
        let d = m.simulate_data(&[0.4], &mut rng);
        assert_eq!(d.rows(), 5);
        assert!(d.summaries[0] <= 5.0);
    }
}
