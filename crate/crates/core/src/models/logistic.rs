use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{check_dim, positive_param, require, Interval, Model, SyntheticData};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::mechanism::{
    compose_budget, knorm_log_acceptance, knorm_release, objective_perturbation, objperb_log_acceptance,
    JacobianConvention, LogisticDesign,
};
use crate::pf::{AcceptanceHook, TemperLevel};

#[inline]
fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `z ~ Beta(a, b)`, `y | z ~ Bernoulli(logistic(β0 + β1 z))`, with
/// `β_j ~ N(0, σ_β²)` and `a, b ~ Gamma(shape, rate)`. Rows are `(z, y)`;
/// summaries `(Σz, Σz²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticBeta {
    pub n: usize,
    pub beta_var: f64,
    pub ab_shape: f64,
    pub ab_rate: f64,
    pub truth: [f64; 4],
}

impl Default for LogisticBeta {
    fn default() -> Self {
        Self {
            n: 1000,
            beta_var: 16.0,
            ab_shape: 6.0,
            ab_rate: 4.0,
            truth: [-3.825, 6.822, 1.1, 1.1],
        }
    }
}

impl LogisticBeta {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n >= 1, || "logistic-beta needs n >= 1".into())?;
        positive_param("beta_var", self.beta_var)?;
        positive_param("ab_shape", self.ab_shape)?;
        positive_param("ab_rate", self.ab_rate)?;
        positive_param("truth a", self.truth[2])?;
        positive_param("truth b", self.truth[3])
    }

    fn beta_prior(&self) -> DistributionSpec {
        DistributionSpec::Normal {
            mean: 0.0,
            sd: self.beta_var.sqrt(),
        }
    }

    fn ab_prior(&self) -> DistributionSpec {
        DistributionSpec::Gamma {
            shape: self.ab_shape,
            rate: self.ab_rate,
        }
    }
}

impl Model for LogisticBeta {
    fn name(&self) -> &str {
        "logistic-beta"
    }

    fn dim(&self) -> usize {
        4
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        ["beta0", "beta1", "a", "b"].iter().map(|s| s.to_string()).collect()
    }

    fn support(&self) -> Vec<Interval> {
        vec![Interval::REAL, Interval::REAL, Interval::POSITIVE, Interval::POSITIVE]
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let bp = self.beta_prior();
        let gp = self.ab_prior();
        vec![
            bp.sample(rng).expect("validated")[0],
            bp.sample(rng).expect("validated")[0],
            gp.sample(rng).expect("validated")[0],
            gp.sample(rng).expect("validated")[0],
        ]
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        check_dim(theta, 4);
        let bp = self.beta_prior();
        let gp = self.ab_prior();
        theta[..2]
            .iter()
            .map(|b| bp.log_density(&[*b]).expect("scalar"))
            .chain(theta[2..].iter().map(|v| gp.log_density(&[*v]).expect("scalar")))
            .sum()
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        check_dim(theta, 4);
        let beta = Beta::new(theta[2], theta[3]).expect("positive shape parameters");
        let mut raw = Vec::with_capacity(2 * self.n);
        for _ in 0..self.n {
            let z: f64 = beta.sample(rng);
            let y = rng.random::<f64>() < sigmoid(theta[0] + theta[1] * z);
            raw.extend([z, f64::from(u8::from(y))]);
        }
        let summaries = self.summary_stats(&raw);
        SyntheticData { raw, ncols: 2, summaries }
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        let (mut s1, mut s2) = (0.0, 0.0);
        for row in raw.chunks_exact(2) {
            let z = row[0].clamp(0.0, 1.0);
            s1 += z;
            s2 += z * z;
        }
        vec![s1, s2]
    }

    fn sensitivity(&self) -> f64 {
        2.0
    }

    fn default_truth(&self) -> Vec<f64> {
        self.truth.to_vec()
    }
}

/// Ages and binary retirement indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusLike {
    pub age: Vec<f64>,
    pub retired: Vec<f64>,
}

impl CensusLike {
    pub fn design(&self) -> LogisticDesign {
        LogisticDesign::with_intercept(&self.age, &self.retired).expect("binary labels, finite ages")
    }

    /// Row-major `(age, retired)` records.
    pub fn raw(&self) -> Vec<f64> {
        self.age.iter().zip(&self.retired).flat_map(|(&a, &r)| [a, r]).collect()
    }
}

/// Synthetic stand-in for the census extract: `age ~ Beta(1.1, 1.1)` on [0, 1]
/// and `retired ~ Bernoulli(logistic(-3.825 + 6.822 age))`.
pub fn synthesize_census_like<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CensusLike {
    let beta = Beta::new(1.1, 1.1).expect("valid");
    let mut age = Vec::with_capacity(n);
    let mut retired = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = beta.sample(rng);
        let r = rng.random::<f64>() < sigmoid(-3.825 + 6.822 * a);
        age.push(a);
        retired.push(f64::from(u8::from(r)));
    }
    CensusLike { age, retired }
}

/// Joint release of logistic coefficients (objective perturbation) and
/// covariate moments (ℓ∞ K-norm), splitting each tempered budget by `share`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticReleaseHook {
    pub theta_dp: Vec<f64>,
    pub z_dp: Vec<f64>,
    pub sensitivity_objective: f64,
    pub sensitivity_knorm: f64,
    /// Budget fraction given to the coefficient release.
    pub share: f64,
    pub convention: JacobianConvention,
}

impl LogisticReleaseHook {
    /// Release `(θ_dp, z_dp)` from confidential data under total budget `epsilon`.
    pub fn release<R: Rng + ?Sized>(
        data: &CensusLike,
        epsilon: f64,
        q: f64,
        share: f64,
        sensitivity: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let eps = compose_budget(epsilon, &[share, 1.0 - share])?;
        let (theta_dp, _) = objective_perturbation(&data.design(), sensitivity, eps[0], q, rng)?;
        let model = LogisticBeta::new(data.age.len());
        let stats = model.summary_stats(&data.raw());
        let z_dp = knorm_release(&stats, sensitivity, eps[1], rng);
        Ok(Self {
            theta_dp,
            z_dp,
            sensitivity_objective: sensitivity,
            sensitivity_knorm: sensitivity,
            share,
            convention: JacobianConvention::default(),
        })
    }

    pub fn s_dp(&self) -> Vec<f64> {
        self.theta_dp.iter().chain(&self.z_dp).copied().collect()
    }
}

impl AcceptanceHook for LogisticReleaseHook {
    fn log_acceptance(&self, data: &SyntheticData, level: &TemperLevel) -> Result<f64> {
        let q = level
            .q
            .ok_or_else(|| Error::Config("logistic release needs a q schedule".into()))?;
        let eps_op = self.share * level.epsilon;
        let eps_k = (1.0 - self.share) * level.epsilon;
        let lk = knorm_log_acceptance(&data.summaries, &self.z_dp, self.sensitivity_knorm, eps_k);
        let (z, y): (Vec<f64>, Vec<f64>) = data.raw.chunks_exact(2).map(|r| (r[0], r[1])).unzip();
        let design = LogisticDesign::with_intercept(&z, &y)?;
        let lo = objperb_log_acceptance(
            &self.theta_dp,
            &design,
            self.sensitivity_objective,
            eps_op,
            q,
            self.convention,
        )?;
        Ok(lk + lo)
    }

    fn needs_raw(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn prior_means() {
        let m = LogisticBeta::default();
        let mut rng = RandomStream::from_parts(5, 0, 0, 0);
        let draws: Vec<Vec<f64>> = (0..20_000).map(|_| m.prior_sample(&mut rng)).collect();
        let mean_a = draws.iter().map(|d| d[2]).sum::<f64>() / draws.len() as f64;
        // Gamma(6, rate 4): mean 1.5, sd sqrt(6)/4.
        let se = (6.0f64).sqrt() / 4.0 / (draws.len() as f64).sqrt();
        assert!((mean_a - 1.5).abs() < 4.0 * se);
    }

    #[test]
    fn release_is_four_dimensional() {
        let mut rng = RandomStream::from_parts(5, 0, 0, 1);
        let data = synthesize_census_like(500, &mut rng);
        let hook = LogisticReleaseHook::release(&data, 0.5, 0.5, 0.9, 2.0, &mut rng).unwrap();
        assert_eq!(hook.s_dp().len(), 4);
        let m = LogisticBeta::new(500);
        let synth = m.simulate_data(&m.default_truth(), &mut rng);
        let level = TemperLevel {
            epsilon: 0.5,
            q: Some(0.5),
        };
        let lr = hook.log_acceptance(&synth, &level).unwrap();
        assert!(lr <= 0.0 && lr.is_finite());
    }
}
