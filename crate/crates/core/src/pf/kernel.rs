use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::Interval;
use crate::special::{bvn_upper, norm_cdf, LN_2PI};

/// Gaussian perturbation kernel `N(center, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    dim: usize,
    cov: Vec<f64>,
    /// Lower Cholesky factor `L` of `Σ`, row-major.
    chol: Vec<f64>,
    /// `L⁻¹`, row-major lower triangular.
    inv_chol: Vec<f64>,
    log_norm: f64,
}

impl GaussianKernel {
    /// Kernel with row-major covariance `cov`.
    pub fn new(cov: &[f64], dim: usize) -> Result<Self> {
        if cov.len() != dim * dim || dim == 0 {
            return Err(Error::Shape {
                expected: dim * dim,
                found: cov.len(),
            });
        }
        let m = DMatrix::from_row_slice(dim, dim, cov);
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("kernel covariance is not positive definite".into()))?;
        let l = chol.l();
        let inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("kernel Cholesky factor is singular".into()))?;
        let log_det_l: f64 = l.diagonal().iter().map(|v| v.ln()).sum();
        let to_rows = |a: &DMatrix<f64>| (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
        Ok(Self {
            dim,
            cov: cov.to_vec(),
            chol: to_rows(&l),
            inv_chol: to_rows(&inv),
            log_norm: -0.5 * dim as f64 * LN_2PI - log_det_l,
        })
    }

    pub fn isotropic(scale: f64, dim: usize) -> Result<Self> {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = scale * scale;
        }
        Self::new(&cov, dim)
    }

    /// `factor ×` the weighted covariance of `points` (row-major, `dim` columns)
    /// plus `ridge · I`.
    pub fn adaptive(points: &[f64], weights: &[f64], dim: usize, factor: f64, ridge: f64) -> Result<Self> {
        let n = weights.len();
        if points.len() != n * dim {
            return Err(Error::Shape {
                expected: n * dim,
                found: points.len(),
            });
        }
        let mut mean = vec![0.0; dim];
        for (row, w) in points.chunks_exact(dim).zip(weights) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += w * x;
            }
        }
        let mut cov = vec![0.0; dim * dim];
        for (row, &w) in points.chunks_exact(dim).zip(weights) {
            if w == 0.0 {
                continue;
            }
            for a in 0..dim {
                let da = row[a] - mean[a];
                for b in a..dim {
                    cov[a * dim + b] += w * da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                let v = factor * cov[a * dim + b];
                cov[a * dim + b] = v;
                cov[b * dim + a] = v;
            }
            cov[a * dim + a] += ridge;
        }
        Self::new(&cov, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    /// Draw from `N(center, Σ)`.
    pub fn perturb(&self, center: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = self.dim;
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        (0..d)
            .map(|i| center[i] + (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum::<f64>())
            .collect()
    }

    /// `L⁻¹ x`.
    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..=i).map(|j| self.inv_chol[i * d + j] * x[j]).sum())
            .collect()
    }

    /// Log normalizing constant `-d/2 ln 2π - ½ ln det Σ`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Log density of moving from `from` to `to`.
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let diff: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        let u = self.whiten(&diff);
        self.log_norm - 0.5 * u.iter().map(|v| v * v).sum::<f64>()
    }

    /// Probability that a draw centred at `center` lands inside the box `support`.
    ///
    /// Exact when at most two coordinates are bounded; beyond that, the product
    /// of the marginal masses.
    pub fn support_mass(&self, center: &[f64], support: &[Interval]) -> f64 {
        let d = self.dim;
        let bounded: Vec<usize> = (0..d).filter(|&i| !support[i].is_unbounded()).collect();
        let sd = |i: usize| self.cov[i * d + i].sqrt();
        let limits = |i: usize| {
            let s = sd(i);
            ((support[i].lower - center[i]) / s, (support[i].upper - center[i]) / s)
        };
        match bounded.len() {
            0 => 1.0,
            2 => {
                let (i, j) = (bounded[0], bounded[1]);
                let rho = self.cov[i * d + j] / (sd(i) * sd(j));
                let (a1, b1) = limits(i);
                let (a2, b2) = limits(j);
                let upper = |h: f64, k: f64| bvn_upper(h, k, rho);
                (upper(a1, a2) - upper(b1, a2) - upper(a1, b2) + upper(b1, b2)).max(0.0)
            }
            _ => bounded
                .iter()
                .map(|&i| {
                    let (a, b) = limits(i);
                    interval_mass(a, b)
                })
                .product(),
        }
    }
}

/// `Φ(b) - Φ(a)` computed on the side that avoids cancellation.
fn interval_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn density_matches_closed_form() {
        let k = GaussianKernel::new(&[2.0, 0.5, 0.5, 1.0], 2).unwrap();
        let from = [0.3, -0.1];
        let to = [1.0, 0.4];
        let det: f64 = 2.0 - 0.25;
        let (dx, dy) = (0.7, 0.5);
        let q = (1.0 * dx * dx - 2.0 * 0.5 * dx * dy + 2.0 * dy * dy) / det;
        let expect = -LN_2PI - 0.5 * det.ln() - 0.5 * q;
        assert!((k.log_density(&from, &to) - expect).abs() < 1e-12);
    }

    #[test]
    fn support_mass_one_dim() {
        let k = GaussianKernel::isotropic(0.2, 1).unwrap();
        let m = k.support_mass(&[0.1], &[Interval::UNIT]);
        let expect = norm_cdf(4.5) - norm_cdf(-0.5);
        assert!((m - expect).abs() < 1e-14);
        assert_eq!(k.support_mass(&[0.1], &[Interval::REAL]), 1.0);
    }

    #[test]
    fn support_mass_two_bounded_by_simulation() {
        let cov = [1.0, 0.0, 0.0, 0.0, 0.5, 0.3, 0.0, 0.3, 0.4];
        let k = GaussianKernel::new(&cov, 3).unwrap();
        let support = [Interval::REAL, Interval::POSITIVE, Interval::POSITIVE];
        let center = [0.0, 0.2, -0.1];
        let m = k.support_mass(&center, &support);
        let mut rng = RandomStream::from_parts(8, 0, 0, 0);
        let draws = 200_000;
        let hits = (0..draws)
            .filter(|_| {
                let x = k.perturb(&center, &mut rng);
                x[1] > 0.0 && x[2] > 0.0
            })
            .count();
        let p = hits as f64 / draws as f64;
        let se = (m * (1.0 - m) / draws as f64).sqrt();
        assert!((p - m).abs() < 4.0 * se, "{p} vs {m}");
    }

    #[test]
    fn adaptive_covariance_of_equal_weights() {
        let pts = [0.0, 0.0, 2.0, 2.0];
        let k = GaussianKernel::adaptive(&pts, &[0.5, 0.5], 2, 2.0, 1e-10).unwrap();
        assert!((k.covariance()[0] - 2.0).abs() < 1e-9 && (k.covariance()[1] - 2.0).abs() < 1e-12);
    }
}
