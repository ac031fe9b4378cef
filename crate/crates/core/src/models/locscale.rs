use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_dim, positive_param, Interval, Model, SyntheticData};
use crate::dist::DistributionSpec;
use crate::error::Result;
use crate::mechanism::ClampSpec;

/// `y ~ N(μ, σ²)`, `μ ~ N(m, τ²)`, `σ² ~ InvGamma(α, β)`; summaries `(Σỹ, Σỹ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocScaleNormal {
    pub n: usize,
    pub m: f64,
    pub tau2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub clamp: ClampSpec,
    pub truth: [f64; 2],
}

impl Default for LocScaleNormal {
    fn default() -> Self {
        Self {
            n: 100,
            m: 0.0,
            tau2: 16.0,
            alpha: 1.0,
            beta: 0.5,
            clamp: ClampSpec::default(),
            truth: [1.0, 1.0],
        }
    }
}

impl LocScaleNormal {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        super::require(self.n >= 1, || "locscale-normal needs n >= 1".into())?;
        positive_param("tau2", self.tau2)?;
        positive_param("alpha", self.alpha)?;
        positive_param("beta", self.beta)?;
        ClampSpec::new(self.clamp.lower, self.clamp.upper)?;
        positive_param("truth sigma2", self.truth[1])
    }

    fn mu_prior(&self) -> DistributionSpec {
        DistributionSpec::Normal {
            mean: self.m,
            sd: self.tau2.sqrt(),
        }
    }

    fn sigma2_prior(&self) -> DistributionSpec {
        DistributionSpec::InverseGamma {
            shape: self.alpha,
            scale: self.beta,
        }
    }
}

impl Model for LocScaleNormal {
    fn name(&self) -> &str {
        "locscale-normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "sigma2".into()]
    }

    fn support(&self) -> Vec<Interval> {
        vec![Interval::REAL, Interval::POSITIVE]
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mu = self.mu_prior().sample(rng).expect("validated")[0];
        let s2 = self.sigma2_prior().sample(rng).expect("validated")[0];
        vec![mu, s2]
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        check_dim(theta, 2);
        self.mu_prior().log_density(&theta[..1]).expect("scalar")
            + self.sigma2_prior().log_density(&theta[1..]).expect("scalar")
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        check_dim(theta, 2);
        let sd = theta[1].sqrt();
        let raw: Vec<f64> = (0..self.n)
            .map(|_| theta[0] + sd * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect();
        let summaries = self.summary_stats(&raw);
        SyntheticData { raw, ncols: 1, summaries }
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        let (mut s1, mut s2) = (0.0, 0.0);
        for &y in raw {
            let t = self.clamp.apply(y);
            s1 += t;
            s2 += t * t;
        }
        vec![s1, s2]
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        check_dim(theta, 2);
        let sd = theta[1].sqrt();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..self.n {
            let z: f64 = StandardNormal.sample(rng);
            let t = self.clamp.apply(theta[0] + sd * z);
            s1 += t;
            s2 += t * t;
        }
        vec![s1, s2]
    }

    fn sensitivity(&self) -> f64 {
        3.0
    }

    fn default_truth(&self) -> Vec<f64> {
        self.truth.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_saturation() {
        let m = LocScaleNormal::new(1);
        assert_eq!(m.summary_stats(&[7.0]), vec![1.0, 1.0]);
        assert_eq!(m.summary_stats(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn prior_support_and_mode() {
        let m = LocScaleNormal::default();
        assert_eq!(m.prior_log_density(&[0.0, -1.0]), f64::NEG_INFINITY);
        let mode = m.beta / (m.alpha + 1.0);
        let at_mode = m.prior_log_density(&[0.0, mode]);
        assert!(at_mode.is_finite());
        assert!(at_mode > m.prior_log_density(&[0.0, mode * 1.1]));
        assert!(at_mode > m.prior_log_density(&[0.0, mode * 0.9]));
    }
}
