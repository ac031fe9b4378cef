use crate::error::Result;
use crate::mechanism::{knorm_log_acceptance, laplace_log_acceptance};
use crate::models::SyntheticData;

/// Tempered budget at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperLevel {
    pub epsilon: f64,
    /// Noise budget fraction for objective perturbation.
    pub q: Option<f64>,
}

impl TemperLevel {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, q: None }
    }
}

/// Evaluates `log r_t(x)`, the log of the mechanism density at the release
/// relative to its supremum. Values must be `<= 0`.
pub trait AcceptanceHook: Send + Sync {
    fn log_acceptance(&self, data: &SyntheticData, level: &TemperLevel) -> Result<f64>;

    /// Whether the hook reads raw records rather than only summaries.
    fn needs_raw(&self) -> bool {
        false
    }
}

/// Componentwise Laplace release of the model summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceHook {
    pub s_dp: Vec<f64>,
    pub sensitivity: f64,
}

impl AcceptanceHook for LaplaceHook {
    fn log_acceptance(&self, data: &SyntheticData, level: &TemperLevel) -> Result<f64> {
        Ok(laplace_log_acceptance(&data.summaries, &self.s_dp, self.sensitivity, level.epsilon))
    }
}

/// ℓ∞ K-norm release of the model summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct KNormHook {
    pub z_dp: Vec<f64>,
    pub sensitivity: f64,
}

impl AcceptanceHook for KNormHook {
    fn log_acceptance(&self, data: &SyntheticData, level: &TemperLevel) -> Result<f64> {
        Ok(knorm_log_acceptance(&data.summaries, &self.z_dp, self.sensitivity, level.epsilon))
    }
}

/// Accepts with a fixed probability regardless of the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantHook {
    pub log_r: f64,
}

impl ConstantHook {
    pub fn always() -> Self {
        Self { log_r: 0.0 }
    }

    pub fn probability(r: f64) -> Self {
        Self { log_r: r.ln() }
    }
}

impl AcceptanceHook for ConstantHook {
    fn log_acceptance(&self, _: &SyntheticData, _: &TemperLevel) -> Result<f64> {
        Ok(self.log_r)
    }
}

/// Wraps a closure over summaries.
pub struct FnHook<F>(pub F);

impl<F> AcceptanceHook for FnHook<F>
where
    F: Fn(&[f64], &TemperLevel) -> f64 + Send + Sync,
{
    fn log_acceptance(&self, data: &SyntheticData, level: &TemperLevel) -> Result<f64> {
        Ok((self.0)(&data.summaries, level))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_hook_matches_direct() {
        let hook = LaplaceHook {
            s_dp: vec![0.0, 0.0],
            sensitivity: 3.0,
        };
        let data = SyntheticData::summaries_only(vec![3.0, 0.0]);
        let r = hook.log_acceptance(&data, &TemperLevel::new(1.0)).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
        assert!(!hook.needs_raw());
    }
}
