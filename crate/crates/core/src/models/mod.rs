//! Bayesian model families: priors, confidential-data simulation and
//! clamped-normalized summary statistics.

mod bernoulli;
mod linreg;
mod locscale;
mod logistic;

pub use bernoulli::BernoulliToy;
pub use linreg::{LinRegConjugate, LinRegNonConjugate};
pub use locscale::LocScaleNormal;
pub use logistic::{synthesize_census_like, CensusLike, LogisticBeta, LogisticReleaseHook};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval bounds for one parameter coordinate; infinite ends allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const REAL: Self = Self {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const POSITIVE: Self = Self {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const UNIT: Self = Self { lower: 0.0, upper: 1.0 };

    pub fn is_unbounded(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }
}

/// A simulated confidential dataset and its summaries.
///
/// `raw` is row-major with `ncols` columns. Models that can draw summaries
/// directly leave `raw` empty on that fast path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticData {
    pub raw: Vec<f64>,
    pub ncols: usize,
    pub summaries: Vec<f64>,
}

impl SyntheticData {
    pub fn summaries_only(summaries: Vec<f64>) -> Self {
        Self {
            raw: Vec::new(),
            ncols: 0,
            summaries,
        }
    }

    pub fn rows(&self) -> usize {
        self.raw.len().checked_div(self.ncols).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.raw[i * self.ncols..(i + 1) * self.ncols]
    }
}

/// Prior, data model and summary map of one model family.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    /// θ-dimension.
    fn dim(&self) -> usize;

    /// Confidential sample size.
    fn n(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    /// Per-coordinate prior support.
    fn support(&self) -> Vec<Interval>;

    fn prior_sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Joint prior log-density; `-inf` off support.
    fn prior_log_density(&self, theta: &[f64]) -> f64;

    /// `n` records from `f(· | θ)` with their summaries.
    fn simulate_data(&self, theta: &[f64], rng: &mut dyn RngCore) -> SyntheticData;

    /// Summary statistics of a raw row-major dataset.
    fn summary_stats(&self, raw: &[f64]) -> Vec<f64>;

    /// Summaries only; may skip materializing the raw records.
    fn simulate_summaries(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        self.simulate_data(theta, rng).summaries
    }

    /// ℓ1 sensitivity of the summary vector under a one-record change.
    fn sensitivity(&self) -> f64;

    /// Parameter values used to generate confidential data in the experiments.
    fn default_truth(&self) -> Vec<f64>;
}

fn check_dim(theta: &[f64], d: usize) {
    assert_eq!(theta.len(), d, "θ has dimension {}, model expects {d}", theta.len());
}

/// Configuration form of every model family, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelSpec {
    BernoulliToy(BernoulliToy),
    LocscaleNormal(LocScaleNormal),
    LinregConjugate(LinRegConjugate),
    LinregNonconjugate(LinRegNonConjugate),
    LogisticBeta(LogisticBeta),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BernoulliToy(_) => "bernoulli-toy",
            Self::LocscaleNormal(_) => "locscale-normal",
            Self::LinregConjugate(_) => "linreg-conjugate",
            Self::LinregNonconjugate(_) => "linreg-nonconjugate",
            Self::LogisticBeta(_) => "logistic-beta",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::BernoulliToy(m) => m.validate(),
            Self::LocscaleNormal(m) => m.validate(),
            Self::LinregConjugate(m) => m.validate(),
            Self::LinregNonconjugate(m) => m.validate(),
            Self::LogisticBeta(m) => m.validate(),
        }
    }

    pub fn as_model(&self) -> &dyn Model {
        match self {
            Self::BernoulliToy(m) => m,
            Self::LocscaleNormal(m) => m,
            Self::LinregConjugate(m) => m,
            Self::LinregNonconjugate(m) => m,
            Self::LogisticBeta(m) => m,
        }
    }
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

pub(crate) fn positive_param(name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"))
}
