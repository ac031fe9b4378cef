use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perturbation kernel choice per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// Gaussian with covariance `factor ×` the weighted covariance of the previous
    /// particles, plus `ridge · I`.
    Adaptive { factor: f64, ridge: f64 },
    /// Isotropic Gaussian with standard deviation `scales[t - 1]` at iteration `t`.
    Fixed { scales: Vec<f64> },
    /// Fresh prior draws; with `T = 1` this is plain rejection sampling.
    Prior,
}

impl KernelSpec {
    pub fn adaptive() -> Self {
        Self::Adaptive {
            factor: 2.0,
            ridge: 1e-10,
        }
    }

    /// Scales decreasing geometrically from `first` to `last` over `t` iterations.
    pub fn geometric(first: f64, last: f64, t: usize) -> Self {
        let scales = if t == 1 {
            vec![last]
        } else {
            let ratio = (last / first).powf(1.0 / (t as f64 - 1.0));
            (0..t).map(|i| first * ratio.powi(i as i32)).collect()
        };
        Self::Fixed { scales }
    }
}

/// Tempered budgets `ε_1 ≤ … ≤ ε_T = ε`, kernel choice and optional `q_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub epsilons: Vec<f64>,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// Iteration 1 draws fresh prior proposals instead of perturbing the
    /// initial particles.
    #[serde(default)]
    pub prior_first: bool,
}

impl Schedule {
    pub fn new(epsilons: Vec<f64>, kernel: KernelSpec, q: Option<Vec<f64>>) -> Self {
        Self {
            epsilons,
            kernel,
            q,
            prior_first: false,
        }
    }

    pub fn with_prior_first(mut self) -> Self {
        self.prior_first = true;
        self
    }

    /// `ε_t = ε · t / T`.
    pub fn linear(epsilon: f64, t: usize, kernel: KernelSpec) -> Self {
        let epsilons = (1..=t)
            .map(|i| if i == t { epsilon } else { epsilon * i as f64 / t as f64 })
            .collect();
        Self::new(epsilons, kernel, None)
    }

    /// `(0.5ε, ε)` with the adaptive kernel; iteration 1 proposes from the prior.
    pub fn locscale(epsilon: f64) -> Self {
        Self::new(vec![0.5 * epsilon, epsilon], KernelSpec::adaptive(), None).with_prior_first()
    }

    /// `0.1ε, 0.2ε, …, ε` with fixed kernel scales from 1 down to 0.1.
    pub fn regression(epsilon: f64) -> Self {
        Self::linear(epsilon, 10, KernelSpec::geometric(1.0, 0.1, 10))
    }

    /// The regression schedule plus `q_t = (0.02q, …, 0.02q, q)`.
    pub fn logistic(epsilon: f64, q: f64) -> Self {
        let mut s = Self::regression(epsilon);
        let mut qs = vec![0.02 * q; 9];
        qs.push(q);
        s.q = Some(qs);
        s
    }

    /// Single rejection step at the full budget with prior proposals.
    pub fn rejection(epsilon: f64) -> Self {
        Self::new(vec![epsilon], KernelSpec::Prior, None)
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn final_epsilon(&self) -> f64 {
        *self.epsilons.last().expect("validated schedule is nonempty")
    }

    /// Checks ordering, positivity, lengths and `ε_T == epsilon`.
    pub fn validate(&self, epsilon: f64) -> Result<()> {
        let t = self.epsilons.len();
        if t == 0 {
            return Err(Error::Config("schedule needs at least one iteration".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("schedule epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("schedule epsilons must be nondecreasing".into()));
        }
        if self.final_epsilon() != epsilon {
            return Err(Error::Config(format!(
                "final schedule epsilon {} differs from the release epsilon {epsilon}",
                self.final_epsilon()
            )));
        }
        match &self.kernel {
            KernelSpec::Adaptive { factor, ridge } => {
                if !(*factor > 0.0) || !(*ridge >= 0.0) {
                    return Err(Error::Config("adaptive kernel needs factor > 0 and ridge >= 0".into()));
                }
            }
            KernelSpec::Fixed { scales } => {
                if scales.len() != t {
                    return Err(Error::Config(format!(
                        "kernel scales have length {}, schedule has {t} iterations",
                        scales.len()
                    )));
                }
                if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::Config("kernel scales must be positive".into()));
                }
            }
            KernelSpec::Prior => {}
        }
        if let Some(q) = &self.q {
            if q.len() != t {
                return Err(Error::Config(format!("q schedule has length {}, expected {t}", q.len())));
            }
            if q.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(Error::Config("q schedule values must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Schedule::locscale(2.0).validate(2.0).unwrap();
        Schedule::regression(0.5).validate(0.5).unwrap();
        Schedule::logistic(0.5, 0.5).validate(0.5).unwrap();
        Schedule::linear(1.0, 4, KernelSpec::adaptive()).validate(1.0).unwrap();
        assert_eq!(Schedule::linear(1.0, 4, KernelSpec::Prior).epsilons, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn bad_schedules_rejected() {
        assert!(Schedule::locscale(2.0).validate(1.0).is_err());
        let s = Schedule::new(vec![1.0, 0.5, 1.0], KernelSpec::adaptive(), None);
        assert!(s.validate(1.0).is_err());
        let s = Schedule::new(vec![1.0], KernelSpec::Fixed { scales: vec![1.0, 2.0] }, None);
        assert!(s.validate(1.0).is_err());
        let mut s = Schedule::logistic(0.5, 0.5);
        s.q.as_mut().unwrap()[3] = 1.0;
        assert!(s.validate(0.5).is_err());
    }

    #[test]
    fn geometric_scales() {
        let KernelSpec::Fixed { scales } = KernelSpec::geometric(1.0, 0.1, 10) else {
            unreachable!()
        };
        assert!((scales[0] - 1.0).abs() < 1e-15 && (scales[9] - 0.1).abs() < 1e-12);
    }
}
