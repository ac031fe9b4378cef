//! Log-space densities and samplers for the distribution families used by the
//! models: priors, data models and mechanism noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_choose, ln_gamma, LN_2PI};

/// Location and lower Cholesky factor of a scale (or covariance) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MvShape {
    loc: DVector<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl MvShape {
    pub fn new(loc: Vec<f64>, scale: Vec<Vec<f64>>) -> Result<Self> {
        let d = loc.len();
        if scale.len() != d || scale.iter().any(|row| row.len() != d) {
            return Err(Error::Shape {
                expected: d,
                found: scale.len(),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| scale[i][j]);
        for i in 0..d {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                    return Err(Error::ParameterDomain("scale matrix is not symmetric".into()));
                }
            }
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::ParameterDomain("scale matrix is not positive definite".into()))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            loc: DVector::from_vec(loc),
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.loc.len()
    }

    /// Squared Mahalanobis distance of `x` from the location.
    fn mahalanobis(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.loc;
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        z.norm_squared()
    }

    fn transform<R: Rng + ?Sized>(&self, rng: &mut R, radial: f64) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.loc + &self.chol * z * radial).iter().copied().collect()
    }
}

/// A distribution family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Normal { mean: f64, sd: f64 },
    MultivariateNormal(MvShape),
    Laplace { loc: f64, scale: f64 },
    /// Shape/rate parameterization (mean = shape / rate).
    Gamma { shape: f64, rate: f64 },
    /// Shape/scale parameterization (density ∝ x^{-shape-1} exp(-scale/x)).
    InverseGamma { shape: f64, scale: f64 },
    Weibull { scale: f64, shape: f64 },
    StudentT { loc: f64, scale: f64, df: f64 },
    /// Location + scale matrix + degrees of freedom.
    MultivariateT { shape: MvShape, df: f64 },
    /// |scale · t_df|, supported on [0, ∞).
    FoldedT { scale: f64, df: f64 },
    Beta { a: f64, b: f64 },
    ChiSquared { df: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
    Multinomial { trials: u64, probs: Vec<f64> },
    /// Number of trials until the first success, supported on {1, 2, ...}.
    Geometric { p: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn t_log_kernel(z2: f64, df: f64, dim: f64) -> f64 {
    ln_gamma((df + dim) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * dim * (df * std::f64::consts::PI).ln()
        - 0.5 * (df + dim) * (z2 / df).ln_1p()
}

impl DistributionSpec {
    pub fn multivariate_normal(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::MultivariateNormal(MvShape::new(mean, cov)?))
    }

    pub fn multivariate_t(loc: Vec<f64>, scale: Vec<Vec<f64>>, df: f64) -> Result<Self> {
        positive("df", df)?;
        Ok(Self::MultivariateT {
            shape: MvShape::new(loc, scale)?,
            df,
        })
    }

    /// Dimension of a draw.
    pub fn dim(&self) -> usize {
        match self {
            Self::MultivariateNormal(s) => s.dim(),
            Self::MultivariateT { shape, .. } => shape.dim(),
            Self::Multinomial { probs, .. } => probs.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal { mean, sd } => {
                positive("sd", sd)?;
                if !mean.is_finite() {
                    return Err(Error::ParameterDomain("mean must be finite".into()));
                }
            }
            Self::MultivariateNormal(_) => {}
            Self::Laplace { scale, .. } => positive("scale", scale)?,
            Self::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)?;
            }
            Self::InverseGamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            Self::Weibull { scale, shape } => {
                positive("scale", scale)?;
                positive("shape", shape)?;
            }
            Self::StudentT { scale, df, .. } | Self::FoldedT { scale, df } => {
                positive("scale", scale)?;
                positive("df", df)?;
            }
            Self::MultivariateT { df, .. } => positive("df", df)?,
            Self::Beta { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Self::ChiSquared { df } => positive("df", df)?,
            Self::Uniform { low, high } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "uniform bounds must satisfy low < high, got [{low}, {high}]"
                    )));
                }
            }
            Self::Bernoulli { p } => probability("p", p)?,
            Self::Multinomial { ref probs, .. } => {
                if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::ParameterDomain("multinomial probabilities must be nonnegative".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::ParameterDomain(format!(
                        "multinomial probabilities sum to {total}, not 1"
                    )));
                }
            }
            Self::Geometric { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::ParameterDomain(format!("geometric p must be in (0, 1], got {p}")));
                }
            }
        }
        Ok(())
    }

    /// One draw. Scalar families return a length-1 vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match self {
            Self::MultivariateNormal(shape) => shape.transform(rng, 1.0),
            Self::MultivariateT { shape, df } => {
                let w = sample_chi_squared(rng, *df);
                shape.transform(rng, (df / w).sqrt())
            }
            Self::Multinomial { trials, probs } => {
                let mut counts = vec![0.0; probs.len()];
                let cat = crate::resample::Categorical::new(probs)?;
                for _ in 0..*trials {
                    counts[cat.sample(rng)] += 1.0;
                }
                counts
            }
            _ => vec![self.sample_scalar(rng)],
        })
    }

    fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Self::Laplace { loc, scale } => loc + scale * sample_standard_laplace(rng),
            Self::Gamma { shape, rate } => sample_gamma(rng, shape) / rate,
            Self::InverseGamma { shape, scale } => scale / sample_gamma(rng, shape),
            Self::Weibull { scale, shape } => {
                let u: f64 = rng.random();
                scale * (-(-u).ln_1p()).powf(1.0 / shape)
            }
            Self::StudentT { loc, scale, df } => loc + scale * sample_student_t(rng, df),
            Self::FoldedT { scale, df } => (scale * sample_student_t(rng, df)).abs(),
            Self::Beta { a, b } => {
                let x = sample_gamma(rng, a);
                let y = sample_gamma(rng, b);
                x / (x + y)
            }
            Self::ChiSquared { df } => sample_chi_squared(rng, df),
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
            Self::Geometric { p } => sample_geometric(rng, p) as f64,
            Self::MultivariateNormal(_) | Self::MultivariateT { .. } | Self::Multinomial { .. } => {
                unreachable!("vector families handled in sample")
            }
        }
    }

    /// Natural-log density (or mass) at `x`; `-inf` off the support, never NaN.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::Shape {
                expected: d,
                found: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Ok(f64::NEG_INFINITY);
        }
        let v = x[0];
        let lp = match self {
            Self::Normal { mean, sd } => {
                let z = (v - mean) / sd;
                -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
            }
            Self::MultivariateNormal(shape) => {
                -0.5 * (d as f64 * LN_2PI + shape.log_det + shape.mahalanobis(x))
            }
            Self::Laplace { loc, scale } => -(2.0 * scale).ln() - (v - loc).abs() / scale,
            Self::Gamma { shape, rate } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * v.ln() - rate * v
                }
            }
            Self::InverseGamma { shape, scale } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * scale.ln() - ln_gamma(*shape) - (shape + 1.0) * v.ln() - scale / v
                }
            }
            Self::Weibull { scale, shape } => {
                if v < 0.0 || (v == 0.0 && *shape < 1.0) {
                    f64::NEG_INFINITY
                } else if v == 0.0 {
                    if *shape == 1.0 {
                        -scale.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    let z = v / scale;
                    shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(*shape)
                }
            }
            Self::StudentT { loc, scale, df } => {
                let z = (v - loc) / scale;
                t_log_kernel(z * z, *df, 1.0) - scale.ln()
            }
            Self::MultivariateT { shape, df } => {
                t_log_kernel(shape.mahalanobis(x), *df, d as f64) - 0.5 * shape.log_det
            }
            Self::FoldedT { scale, df } => {
                if v < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let z = v / scale;
                    std::f64::consts::LN_2 + t_log_kernel(z * z, *df, 1.0) - scale.ln()
                }
            }
            Self::Beta { a, b } => {
                if !(0.0..=1.0).contains(&v) {
                    f64::NEG_INFINITY
                } else {
                    let la = if *a == 1.0 { 0.0 } else { (a - 1.0) * v.ln() };
                    let lb = if *b == 1.0 { 0.0 } else { (b - 1.0) * (-v).ln_1p() };
                    la + lb - ln_beta(*a, *b)
                }
            }
            Self::ChiSquared { df } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let k = df / 2.0;
                    (k - 1.0) * v.ln() - v / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)
                }
            }
            Self::Uniform { low, high } => {
                if v < *low || v > *high {
                    f64::NEG_INFINITY
                } else {
                    -(high - low).ln()
                }
            }
            Self::Bernoulli { p } => {
                if v == 1.0 {
                    p.ln()
                } else if v == 0.0 {
                    (-p).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Multinomial { trials, probs } => {
                let mut total = 0u64;
                let mut lp = 0.0;
                for (&c, &p) in x.iter().zip(probs) {
                    if c < 0.0 || c.fract() != 0.0 {
                        return Ok(f64::NEG_INFINITY);
                    }
                    let c = c as u64;
                    total += c;
                    if c > 0 {
                        if p == 0.0 {
                            return Ok(f64::NEG_INFINITY);
                        }
                        lp += c as f64 * p.ln() - ln_gamma(c as f64 + 1.0);
                    }
                }
                if total != *trials {
                    return Ok(f64::NEG_INFINITY);
                }
                lp + ln_gamma(*trials as f64 + 1.0)
            }
            Self::Geometric { p } => {
                if v < 1.0 || v.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else if *p == 1.0 {
                    if v == 1.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    (v - 1.0) * (-p).ln_1p() + p.ln()
                }
            }
        };
        Ok(if lp.is_nan() { f64::NEG_INFINITY } else { lp })
    }
}

/// Binomial probability mass in log space; used by the enumeration oracle.
pub fn binomial_log_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let lk = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let lnk = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    ln_choose(n, k) + lk + lnk
}

pub(crate) fn sample_standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mag = -(1.0 - rng.random::<f64>()).ln();
    if rng.random::<bool>() {
        -mag
    } else {
        mag
    }
}

pub(crate) fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    rand_distr::Gamma::new(shape, 1.0)
        .expect("validated shape")
        .sample(rng)
}

fn sample_chi_squared<R: Rng + ?Sized>(rng: &mut R, df: f64) -> f64 {
    2.0 * sample_gamma(rng, df / 2.0)
}

fn sample_student_t<R: Rng + ?Sized>(rng: &mut R, df: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z / (sample_chi_squared(rng, df) / df).sqrt()
}

pub(crate) fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    1 + (u.ln() / (-p).ln_1p()).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn rng() -> RandomStream {
        RandomStream::from_parts(11, 0, 0, 0)
    }

    #[test]
    fn degenerate_normal_collapses() {
        let d = DistributionSpec::Normal { mean: 0.0, sd: 1e-300 };
        let mut r = rng();
        for _ in 0..10 {
            assert!(d.sample(&mut r).unwrap()[0].abs() < 1e-250);
        }
    }

    #[test]
    fn mode_values() {
        let lap = DistributionSpec::Laplace { loc: 0.0, scale: 1.0 };
        assert!((lap.log_density(&[0.0]).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let n = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
        assert!((n.log_density(&[0.0]).unwrap() + 0.5 * LN_2PI).abs() < 1e-15);
        let ig = DistributionSpec::InverseGamma { shape: 1.0, scale: 0.5 };
        assert_eq!(ig.log_density(&[0.0]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(ig.log_density(&[-1.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut r = rng();
        assert!(matches!(
            DistributionSpec::Gamma { shape: -1.0, rate: 1.0 }.sample(&mut r),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DistributionSpec::multivariate_normal(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DistributionSpec::Normal { mean: 0.0, sd: 1.0 }.log_density(&[0.0, 1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn multivariate_t_reduces_to_univariate() {
        let mv = DistributionSpec::multivariate_t(vec![0.5], vec![vec![4.0]], 2.0).unwrap();
        let uv = DistributionSpec::StudentT { loc: 0.5, scale: 2.0, df: 2.0 };
        for x in [-3.0, 0.0, 0.5, 7.0] {
            let a = mv.log_density(&[x]).unwrap();
            let b = uv.log_density(&[x]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mvn_matches_product_of_normals_for_diagonal_cov() {
        let mv = DistributionSpec::multivariate_normal(vec![1.0, -1.0], vec![vec![4.0, 0.0], vec![0.0, 0.25]]).unwrap();
        let a = DistributionSpec::Normal { mean: 1.0, sd: 2.0 };
        let b = DistributionSpec::Normal { mean: -1.0, sd: 0.5 };
        let x = [0.3, -0.2];
        let joint = mv.log_density(&x).unwrap();
        let prod = a.log_density(&x[..1]).unwrap() + b.log_density(&x[1..]).unwrap();
        assert!((joint - prod).abs() < 1e-12);
    }

    #[test]
    fn discrete_masses_sum_to_one() {
        let g = DistributionSpec::Geometric { p: 0.3 };
        let total: f64 = (1..400).map(|k| g.log_density(&[k as f64]).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let m = DistributionSpec::Multinomial { trials: 4, probs: vec![0.2, 0.3, 0.5] };
        let mut total = 0.0;
        for a in 0..=4 {
            for b in 0..=(4 - a) {
                total += m.log_density(&[a as f64, b as f64, (4 - a - b) as f64]).unwrap().exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(m.log_density(&[1.0, 1.0, 1.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn binomial_pmf_normalizes() {
        let total: f64 = (0..=20).map(|k| binomial_log_pmf(20, k, 0.37).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(binomial_log_pmf(5, 0, 0.0).abs() < 1e-12);
        assert!(binomial_log_pmf(5, 5, 1.0).abs() < 1e-12);
    }
}
