//! Weighted posterior estimates, effective sample size, variance estimate and
//! asymptotic confidence intervals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::normal_quantile;

/// `(Σw)² / Σw²`; invariant to rescaling.
pub fn ess_hat(weights: &[f64]) -> Result<f64> {
    let max = weights.iter().copied().fold(0.0f64, f64::max);
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::DegenerateWeights("weights must be finite and nonnegative".into()));
    }
    if max == 0.0 {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }
    let (s, s2) = weights.iter().fold((0.0, 0.0), |(s, s2), w| {
        let v = w / max;
        (s + v, s2 + v * v)
    });
    Ok(s * s / s2)
}

fn check_weights(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(Error::Shape {
            expected: weights.len(),
            found: len,
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::DegenerateWeights(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// `Σ wᵢ φᵢ` for scalar values with normalized weights.
pub fn weighted_mean(weights: &[f64], values: &[f64]) -> Result<f64> {
    check_weights(weights, values.len())?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite test-function value".into()));
    }
    Ok(weights.iter().zip(values).map(|(w, v)| w * v).sum())
}

/// Coordinatewise `Σ wᵢ φ(θᵢ)` for vector-valued `φ`.
pub fn weighted_mean_vec<F>(weights: &[f64], points: &[Vec<f64>], phi: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let values: Vec<Vec<f64>> = points.iter().map(|p| phi(p)).collect();
    let k = values.first().map_or(0, Vec::len);
    (0..k)
        .map(|c| {
            let col: Vec<f64> = values.iter().map(|v| v[c]).collect();
            weighted_mean(weights, &col)
        })
        .collect()
}

/// `Σ wᵢ(φᵢ - Ê)² / (ESS/N) + N Σ wᵢ(wᵢ - 1/N)(φᵢ - Ê)²`.
///
/// The remainder is evaluated on mean-one weights `N wᵢ`. Equal weights give
/// the plain weighted variance.
pub fn variance_hat(weights: &[f64], values: &[f64]) -> Result<f64> {
    let (first, remainder, n) = variance_terms(weights, values)?;
    Ok((first + n * remainder).max(0.0))
}

/// As [`variance_hat`] with the remainder on normalized weights,
/// `Σ wᵢ(φᵢ - Ê)² / (ESS/N) + Σ wᵢ(wᵢ - 1/N)(φᵢ - Ê)²`.
pub fn variance_hat_unscaled(weights: &[f64], values: &[f64]) -> Result<f64> {
    let (first, remainder, _) = variance_terms(weights, values)?;
    Ok((first + remainder).max(0.0))
}

fn variance_terms(weights: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, found: n });
    }
    let mean = weighted_mean(weights, values)?;
    let ess = ess_hat(weights)?;
    let inv_n = 1.0 / n as f64;
    let (mut first, mut remainder) = (0.0, 0.0);
    for (w, v) in weights.iter().zip(values) {
        let d2 = (v - mean) * (v - mean);
        first += w * d2;
        remainder += w * (w - inv_n) * d2;
    }
    Ok((first / (ess / n as f64), remainder, n as f64))
}

/// `estimate ± z_{1-α/2} · sqrt(v̂ / N)`.
pub fn confidence_interval(estimate: f64, variance: f64, n: usize, alpha: f64) -> (f64, f64) {
    let z = normal_quantile(1.0 - alpha / 2.0);
    let half = z * (variance / n as f64).sqrt();
    (estimate - half, estimate + half)
}

/// Estimates, variance and intervals for each coordinate of `φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: Vec<f64>,
    pub ess: f64,
    pub variance_hat: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub alpha: f64,
    pub n: usize,
}

impl EstimateReport {
    /// Report for `φ(θ) = θ` over row-major points with `dim` columns.
    pub fn from_columns(weights: &[f64], points: &[f64], dim: usize, alpha: f64) -> Result<Self> {
        let n = weights.len();
        if points.len() != n * dim {
            return Err(Error::Shape {
                expected: n * dim,
                found: points.len(),
            });
        }
        let mut report = Self {
            estimate: Vec::with_capacity(dim),
            ess: ess_hat(weights)?,
            variance_hat: Vec::with_capacity(dim),
            ci_lower: Vec::with_capacity(dim),
            ci_upper: Vec::with_capacity(dim),
            alpha,
            n,
        };
        for c in 0..dim {
            let col: Vec<f64> = points.iter().skip(c).step_by(dim).copied().collect();
            let e = weighted_mean(weights, &col)?;
            let v = variance_hat(weights, &col)?;
            let (lo, hi) = confidence_interval(e, v, n, alpha);
            report.estimate.push(e);
            report.variance_hat.push(v);
            report.ci_lower.push(lo);
            report.ci_upper.push(hi);
        }
        Ok(report)
    }

    pub fn for_particles(set: &crate::pf::ParticleSet, alpha: f64) -> Result<Self> {
        Self::from_columns(&set.weights, &set.theta, set.dim, alpha)
    }

    /// Monte Carlo standard error `sqrt(v̂/N)` per coordinate.
    pub fn mcse(&self) -> Vec<f64> {
        self.variance_hat.iter().map(|v| (v / self.n as f64).sqrt()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_examples() {
        assert_eq!(ess_hat(&[1.0; 100]).unwrap(), 100.0);
        assert_eq!(ess_hat(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((ess_hat(&[2.0, 1.0, 1.0]).unwrap() - 16.0 / 6.0).abs() < 1e-12);
        assert!(ess_hat(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(weighted_mean(&[0.5, 0.5], &[0.0, 2.0]).unwrap(), 1.0);
        assert!((weighted_mean(&[0.2, 0.3, 0.5], &[4.0, 4.0, 4.0]).unwrap() - 4.0).abs() < 1e-15);
        assert!(weighted_mean(&[0.5, 0.5], &[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn variance_examples() {
        let w = [0.25; 4];
        let v = [1.0, 2.0, 3.0, 4.0];
        let plain = v.iter().map(|x| (x - 2.5f64).powi(2)).sum::<f64>() / 4.0;
        assert!((variance_hat(&w, &v).unwrap() - plain).abs() < 1e-15);
        assert_eq!(variance_hat(&[0.3, 0.7], &[2.0, 2.0]).unwrap(), 0.0);
        assert!(variance_hat(&[1.0], &[1.0]).is_err());
        assert!((variance_hat_unscaled(&w, &v).unwrap() - plain).abs() < 1e-15);
        // σ² = 0.3, ESS = 1/0.58, normalized remainder -0.0168
        let (w, v) = ([0.3, 0.7], [1.0, 0.0]);
        assert!((variance_hat_unscaled(&w, &v).unwrap() - (0.21 * 1.16 - 0.0168)).abs() < 1e-12);
        assert!((variance_hat(&w, &v).unwrap() - (0.21 * 1.16 - 2.0 * 0.0168)).abs() < 1e-12);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(confidence_interval(1.0, 0.0, 10, 0.05), (1.0, 1.0));
        let (lo, hi) = confidence_interval(0.0, 50.0, 50, 0.05);
        assert!((hi - 1.959_963_984_540_054).abs() < 1e-9 && (lo + hi).abs() < 1e-15);
    }
}
