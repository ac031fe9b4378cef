//! Clamping, privacy mechanisms, their densities relative to the supremum, and
//! budget composition.
//!
//! Every acceptance probability here is `m_eps(s_dp | x) / sup_x m_eps(s_dp | x)`
//! with the supremum taken over unconstrained statistic values. For additive
//! mechanisms that supremum sits at `stats == s_dp`.

mod knorm;
mod laplace;
mod objective;

pub use knorm::{knorm_acceptance, knorm_linf_sample, knorm_log_acceptance, knorm_release};
pub use laplace::{laplace_acceptance, laplace_log_acceptance, laplace_release};
pub use objective::{
    logistic_gradient, logistic_hessian, objective_gamma, objective_perturbation,
    objective_release_log_density, objperb_acceptance, objperb_log_acceptance, perturbed_minimizer,
    record_hessian_max_eigenvalue, residual_noise, symmetric_eigenvalues, JacobianConvention,
    LogisticDesign, NewtonOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamping bounds `[lower, upper]` followed by an affine map onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampSpec {
    pub lower: f64,
    pub upper: f64,
}

impl ClampSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Config(format!(
                "clamp bounds must satisfy L < U, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        let c = v.max(self.lower).min(self.upper);
        2.0 * (c - self.lower) / (self.upper - self.lower) - 1.0
    }
}

impl Default for ClampSpec {
    fn default() -> Self {
        Self {
            lower: -5.0,
            upper: 5.0,
        }
    }
}

/// Clamp each value to `[L, U]` and map it affinely onto `[-1, 1]`.
pub fn clamp_normalize(values: &[f64], clamp: &ClampSpec) -> Vec<f64> {
    values.iter().map(|&v| clamp.apply(v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Laplace,
    KnormLinf,
    ObjectivePerturbation,
}

/// A configured privacy mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub sensitivity: f64,
    pub epsilon: f64,
    /// Budget fraction for the noise term (objective perturbation only).
    #[serde(default)]
    pub q: Option<f64>,
    /// Upper bound on per-record Hessian eigenvalues (objective perturbation only).
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl MechanismSpec {
    pub fn laplace(sensitivity: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            kind: MechanismKind::Laplace,
            sensitivity,
            epsilon,
            q: None,
            lambda: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn knorm_linf(sensitivity: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            kind: MechanismKind::KnormLinf,
            sensitivity,
            epsilon,
            q: None,
            lambda: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn objective_perturbation(sensitivity: f64, epsilon: f64, q: f64, lambda: f64) -> Result<Self> {
        let spec = Self {
            kind: MechanismKind::ObjectivePerturbation,
            sensitivity,
            epsilon,
            q: Some(q),
            lambda: Some(lambda),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(Error::Config(format!(
                "sensitivity must be positive, got {}",
                self.sensitivity
            )));
        }
        if self.kind == MechanismKind::ObjectivePerturbation {
            let q = self
                .q
                .ok_or_else(|| Error::Config("objective perturbation requires q".into()))?;
            let lambda = self
                .lambda
                .ok_or_else(|| Error::Config("objective perturbation requires lambda".into()))?;
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Config(format!("q must lie in (0, 1), got {q}")));
            }
            if !(lambda > 0.0) {
                return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
            }
            let gamma = objective_gamma(lambda, self.epsilon, q);
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Config(format!("regularizer gamma = {gamma} is not positive")));
            }
        }
        Ok(())
    }
}

/// A released statistic together with the mechanism and budget accounting behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateRelease {
    pub s_dp: Vec<f64>,
    pub mechanism: MechanismSpec,
    /// (component group, budget fraction) pairs.
    pub budget_shares: Vec<(String, f64)>,
}

impl PrivateRelease {
    pub fn validate(&self) -> Result<()> {
        self.mechanism.validate()?;
        let shares: Vec<f64> = self.budget_shares.iter().map(|(_, f)| *f).collect();
        compose_budget(self.mechanism.epsilon, &shares).map(|_| ())
    }
}

/// Split a total budget by fractions; sequential composition makes the parts sum back to `total`.
pub fn compose_budget(total: f64, shares: &[f64]) -> Result<Vec<f64>> {
    if !(total > 0.0) {
        return Err(Error::Config(format!("total epsilon must be positive, got {total}")));
    }
    if shares.is_empty() || shares.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Config("budget shares must be positive".into()));
    }
    let sum: f64 = shares.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("budget shares sum to {sum}, not 1")));
    }
    Ok(shares.iter().map(|s| s * total).collect())
}
