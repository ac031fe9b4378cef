use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_dim, positive_param, require, Interval, Model, SyntheticData};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::mechanism::ClampSpec;
use crate::special::LN_2PI;

/// θ layout shared by both prior families: `(β0, β1, τ, μ, φ)`.
const PARAMS: [&str; 5] = ["beta0", "beta1", "tau", "mu", "phi"];

fn support() -> Vec<Interval> {
    vec![
        Interval::REAL,
        Interval::REAL,
        Interval::POSITIVE,
        Interval::REAL,
        Interval::POSITIVE,
    ]
}

/// `x ~ N(μ, 1/φ)`, `y | x ~ N(β0 + β1 x, 1/τ)`, rows `(x, y)`.
fn simulate(theta: &[f64], n: usize, rng: &mut dyn RngCore, mut sink: impl FnMut(f64, f64)) {
    let sx = 1.0 / theta[4].sqrt();
    let sy = 1.0 / theta[2].sqrt();
    for _ in 0..n {
        let zx: f64 = StandardNormal.sample(rng);
        let zy: f64 = StandardNormal.sample(rng);
        let x = theta[3] + sx * zx;
        let y = theta[0] + theta[1] * x + sy * zy;
        sink(x, y);
    }
}

/// `(Σỹ, Σx̃ỹ, Σỹ², Σx̃, Σx̃²)`.
struct Accumulator<'a> {
    cx: &'a ClampSpec,
    cy: &'a ClampSpec,
    s: [f64; 5],
}

impl<'a> Accumulator<'a> {
    fn new(cx: &'a ClampSpec, cy: &'a ClampSpec) -> Self {
        Self { cx, cy, s: [0.0; 5] }
    }

    #[inline]
    fn push(&mut self, x: f64, y: f64) {
        let xt = self.cx.apply(x);
        let yt = self.cy.apply(y);
        self.s[0] += yt;
        self.s[1] += xt * yt;
        self.s[2] += yt * yt;
        self.s[3] += xt;
        self.s[4] += xt * xt;
    }
}

fn summarize(raw: &[f64], cx: &ClampSpec, cy: &ClampSpec) -> Vec<f64> {
    let mut acc = Accumulator::new(cx, cy);
    for row in raw.chunks_exact(2) {
        acc.push(row[0], row[1]);
    }
    acc.s.to_vec()
}

fn simulate_data(theta: &[f64], n: usize, cx: &ClampSpec, cy: &ClampSpec, rng: &mut dyn RngCore) -> SyntheticData {
    let mut raw = Vec::with_capacity(2 * n);
    simulate(theta, n, rng, |x, y| raw.extend([x, y]));
    let summaries = summarize(&raw, cx, cy);
    SyntheticData { raw, ncols: 2, summaries }
}

fn simulate_summaries(theta: &[f64], n: usize, cx: &ClampSpec, cy: &ClampSpec, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut acc = Accumulator::new(cx, cy);
    simulate(theta, n, rng, |x, y| acc.push(x, y));
    acc.s.to_vec()
}

/// Heavy-tailed priors: `β ~ t_2(m, V, df)`, `τ ~ Weibull(scale, shape)`,
/// `μ ~ t(loc, scale, df)`, `φ ~ |t(scale, df)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinRegNonConjugate {
    pub n: usize,
    pub beta_loc: [f64; 2],
    pub beta_scale: [[f64; 2]; 2],
    pub beta_df: f64,
    pub tau_scale: f64,
    pub tau_shape: f64,
    pub mu_loc: f64,
    pub mu_scale: f64,
    pub mu_df: f64,
    pub phi_scale: f64,
    pub phi_df: f64,
    pub clamp_x: ClampSpec,
    pub clamp_y: ClampSpec,
    pub truth: [f64; 5],
}

impl Default for LinRegNonConjugate {
    fn default() -> Self {
        Self {
            n: 100,
            beta_loc: [0.0, 0.0],
            beta_scale: [[1.0, 0.0], [0.0, 1.0]],
            beta_df: 2.0,
            tau_scale: 1.25,
            tau_shape: 2.0,
            mu_loc: 0.0,
            mu_scale: 1.0,
            mu_df: 2.0,
            phi_scale: 1.0,
            phi_df: 2.0,
            clamp_x: ClampSpec::default(),
            clamp_y: ClampSpec::default(),
            truth: [0.0, 2.0, 1.0, 1.0, 1.0],
        }
    }
}

impl LinRegNonConjugate {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n >= 1, || "linreg needs n >= 1".into())?;
        self.priors()?.iter().try_for_each(DistributionSpec::validate)?;
        ClampSpec::new(self.clamp_x.lower, self.clamp_x.upper)?;
        ClampSpec::new(self.clamp_y.lower, self.clamp_y.upper)?;
        positive_param("truth tau", self.truth[2])?;
        positive_param("truth phi", self.truth[4])
    }

    fn priors(&self) -> Result<[DistributionSpec; 4]> {
        Ok([
            DistributionSpec::multivariate_t(
                self.beta_loc.to_vec(),
                self.beta_scale.iter().map(|r| r.to_vec()).collect(),
                self.beta_df,
            )?,
            DistributionSpec::Weibull {
                scale: self.tau_scale,
                shape: self.tau_shape,
            },
            DistributionSpec::StudentT {
                loc: self.mu_loc,
                scale: self.mu_scale,
                df: self.mu_df,
            },
            DistributionSpec::FoldedT {
                scale: self.phi_scale,
                df: self.phi_df,
            },
        ])
    }
}

impl Model for LinRegNonConjugate {
    fn name(&self) -> &str {
        "linreg-nonconjugate"
    }

    fn dim(&self) -> usize {
        5
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        PARAMS.iter().map(|s| s.to_string()).collect()
    }

    fn support(&self) -> Vec<Interval> {
        support()
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let priors = self.priors().expect("validated");
        priors
            .iter()
            .flat_map(|p| p.sample(rng).expect("validated"))
            .collect()
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        check_dim(theta, 5);
        let p = self.priors().expect("validated");
        p[0].log_density(&theta[..2]).expect("dim")
            + p[1].log_density(&theta[2..3]).expect("dim")
            + p[2].log_density(&theta[3..4]).expect("dim")
            + p[3].log_density(&theta[4..5]).expect("dim")
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        check_dim(theta, 5);
        simulate_data(theta, self.n, &self.clamp_x, &self.clamp_y, rng)
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        summarize(raw, &self.clamp_x, &self.clamp_y)
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        check_dim(theta, 5);
        simulate_summaries(theta, self.n, &self.clamp_x, &self.clamp_y, rng)
    }

    fn sensitivity(&self) -> f64 {
        8.0
    }

    fn default_truth(&self) -> Vec<f64> {
        self.truth.to_vec()
    }
}

/// Conjugate priors: `β | τ ~ N(m, (τV)⁻¹)`, `τ ~ Gamma(a/2, rate b/2)`,
/// `μ ~ N(μ0, Σ)`, `φ ~ χ²(d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinRegConjugate {
    pub n: usize,
    pub beta_mean: [f64; 2],
    /// Prior precision multiplier `V` of β (scaled by τ).
    pub beta_precision: [[f64; 2]; 2],
    pub tau_a: f64,
    pub tau_b: f64,
    pub mu_mean: f64,
    pub mu_var: f64,
    pub phi_df: f64,
    pub clamp_x: ClampSpec,
    pub clamp_y: ClampSpec,
    pub truth: [f64; 5],
}

impl Default for LinRegConjugate {
    fn default() -> Self {
        Self {
            n: 100,
            beta_mean: [0.0, 0.0],
            beta_precision: [[1.0, 0.0], [0.0, 1.0]],
            tau_a: 2.0,
            tau_b: 2.0,
            mu_mean: 0.0,
            mu_var: 1.0,
            phi_df: 2.0,
            clamp_x: ClampSpec::default(),
            clamp_y: ClampSpec::default(),
            truth: [0.0, 2.0, 1.0, 1.0, 1.0],
        }
    }
}

impl LinRegConjugate {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n >= 1, || "linreg needs n >= 1".into())?;
        positive_param("tau_a", self.tau_a)?;
        positive_param("tau_b", self.tau_b)?;
        positive_param("mu_var", self.mu_var)?;
        positive_param("phi_df", self.phi_df)?;
        let v = self.beta_precision;
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        if !(v[0][0] > 0.0 && det > 0.0) || v[0][1] != v[1][0] {
            return Err(Error::Config("beta_precision must be symmetric positive definite".into()));
        }
        ClampSpec::new(self.clamp_x.lower, self.clamp_x.upper)?;
        ClampSpec::new(self.clamp_y.lower, self.clamp_y.upper)?;
        positive_param("truth tau", self.truth[2])?;
        positive_param("truth phi", self.truth[4])
    }

    fn tau_prior(&self) -> DistributionSpec {
        DistributionSpec::Gamma {
            shape: self.tau_a / 2.0,
            rate: self.tau_b / 2.0,
        }
    }

    fn mu_prior(&self) -> DistributionSpec {
        DistributionSpec::Normal {
            mean: self.mu_mean,
            sd: self.mu_var.sqrt(),
        }
    }

    fn phi_prior(&self) -> DistributionSpec {
        DistributionSpec::ChiSquared { df: self.phi_df }
    }

    fn beta_log_density(&self, beta: &[f64], tau: f64) -> f64 {
        let v = self.beta_precision;
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        let d0 = beta[0] - self.beta_mean[0];
        let d1 = beta[1] - self.beta_mean[1];
        let q = v[0][0] * d0 * d0 + 2.0 * v[0][1] * d0 * d1 + v[1][1] * d1 * d1;
        -LN_2PI + tau.ln() + 0.5 * det.ln() - 0.5 * tau * q
    }
}

impl Model for LinRegConjugate {
    fn name(&self) -> &str {
        "linreg-conjugate"
    }

    fn dim(&self) -> usize {
        5
    }

    fn n(&self) -> usize {
        self.n
    }

    fn param_names(&self) -> Vec<String> {
        PARAMS.iter().map(|s| s.to_string()).collect()
    }

    fn support(&self) -> Vec<Interval> {
        support()
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let tau = self.tau_prior().sample(rng).expect("validated")[0];
        // Covariance (τV)⁻¹ through its 2×2 Cholesky factor.
        let v = self.beta_precision;
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        let (c00, c01, c11) = (v[1][1] / (det * tau), -v[0][1] / (det * tau), v[0][0] / (det * tau));
        let l00 = c00.sqrt();
        let l10 = c01 / l00;
        let l11 = (c11 - l10 * l10).sqrt();
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let b0 = self.beta_mean[0] + l00 * z0;
        let b1 = self.beta_mean[1] + l10 * z0 + l11 * z1;
        let mu = self.mu_prior().sample(rng).expect("validated")[0];
        let phi = self.phi_prior().sample(rng).expect("validated")[0];
        vec![b0, b1, tau, mu, phi]
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        check_dim(theta, 5);
        let lt = self.tau_prior().log_density(&theta[2..3]).expect("dim");
        if lt == f64::NEG_INFINITY {
            return lt;
        }
        let lp = lt
            + self.beta_log_density(&theta[..2], theta[2])
            + self.mu_prior().log_density(&theta[3..4]).expect("dim")
            + self.phi_prior().log_density(&theta[4..5]).expect("dim");
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData {
        check_dim(theta, 5);
        simulate_data(theta, self.n, &self.clamp_x, &self.clamp_y, rng)
    }

    fn summary_stats(&self, raw: &[f64]) -> Vec<f64> {
        summarize(raw, &self.clamp_x, &self.clamp_y)
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        check_dim(theta, 5);
        simulate_summaries(theta, self.n, &self.clamp_x, &self.clamp_y, rng)
    }

    fn sensitivity(&self) -> f64 {
        8.0
    }

    fn default_truth(&self) -> Vec<f64> {
        self.truth.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_layout() {
        let m = LinRegNonConjugate::new(2);
        let s = m.summary_stats(&[2.5, -5.0, 10.0, 1.0]);
        // x̃ = (0.5, 1), ỹ = (-1, 0.2)
        let expect = [-0.8, -0.5 + 0.2, 1.04, 1.5, 1.25];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_prior_factorization() {
        let m = LinRegConjugate::default();
        let th = [0.3, -0.2, 1.5, 0.1, 0.7];
        let mvn = DistributionSpec::multivariate_normal(
            vec![0.0, 0.0],
            vec![vec![1.0 / 1.5, 0.0], vec![0.0, 1.0 / 1.5]],
        )
        .unwrap();
        let expect = mvn.log_density(&th[..2]).unwrap()
            + m.tau_prior().log_density(&th[2..3]).unwrap()
            + m.mu_prior().log_density(&th[3..4]).unwrap()
            + m.phi_prior().log_density(&th[4..5]).unwrap();
        assert!((m.prior_log_density(&th) - expect).abs() < 1e-12);
        assert_eq!(m.prior_log_density(&[0.0, 0.0, -1.0, 0.0, 1.0]), f64::NEG_INFINITY);
    }
}
