use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::knorm::knorm_linf_sample;
use crate::error::{Error, Result};

/// Feature rows (row-major, `dim` columns, intercept included) with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticDesign {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl LogisticDesign {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Shape {
                expected: labels.len() * dim,
                found: features.len(),
            });
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::ParameterDomain("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain("features must be finite".into()));
        }
        Ok(Self { features, labels, dim })
    }

    /// Rows `(1, z_i)` for a single covariate.
    pub fn with_intercept(covariate: &[f64], labels: &[f64]) -> Result<Self> {
        let features = covariate.iter().flat_map(|&z| [1.0, z]).collect();
        Self::new(features, labels.to_vec(), 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    pub fn set_row(&mut self, i: usize, row: &[f64], label: f64) {
        self.features[i * self.dim..(i + 1) * self.dim].copy_from_slice(row);
        self.labels[i] = label;
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn total_loss(design: &LogisticDesign, theta: &[f64]) -> f64 {
    design
        .rows()
        .map(|(x, y)| {
            let t = dot(x, theta);
            softplus(t) - y * t
        })
        .sum()
}

/// Total log-loss gradient `Σ (σ(xᵀθ) - y) x`.
pub fn logistic_gradient(design: &LogisticDesign, theta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.dim];
    for (x, y) in design.rows() {
        let r = sigmoid(dot(x, theta)) - y;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
    }
    g
}

/// Total log-loss Hessian `Σ σ(1-σ) x xᵀ`, row-major `d × d`.
pub fn logistic_hessian(design: &LogisticDesign, theta: &[f64]) -> Vec<f64> {
    let d = design.dim;
    let mut h = vec![0.0; d * d];
    for (x, _) in design.rows() {
        let p = sigmoid(dot(x, theta));
        let w = p * (1.0 - p);
        for j in 0..d {
            let wx = w * x[j];
            for k in j..d {
                h[j * d + k] += wx * x[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            h[j * d + k] = h[k * d + j];
        }
    }
    h
}

/// Largest eigenvalue of a single record's Hessian `p(1-p) x xᵀ`.
pub fn record_hessian_max_eigenvalue(row: &[f64], theta: &[f64]) -> f64 {
    let p = sigmoid(dot(row, theta));
    p * (1.0 - p) * dot(row, row)
}

/// Eigenvalues of a symmetric row-major `d × d` matrix, ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], d: usize) -> Result<Vec<f64>> {
    if matrix.len() != d * d {
        return Err(Error::Shape {
            expected: d * d,
            found: matrix.len(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite Hessian entry".into()));
    }
    let mut eig = match d {
        1 => vec![matrix[0]],
        2 => {
            let (a, b, c) = (matrix[0], matrix[1], matrix[3]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            vec![mid - rad, mid + rad]
        }
        _ => {
            let m = DMatrix::from_row_slice(d, d, matrix);
            SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
        }
    };
    eig.sort_by(f64::total_cmp);
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    Ok(eig)
}

/// `γ = λ / (exp(ε(1-q)) - 1)`.
pub fn objective_gamma(lambda: f64, epsilon: f64, q: f64) -> f64 {
    lambda / (epsilon * (1.0 - q)).exp_m1()
}

/// Noise vector implied by a released θ through the first-order condition:
/// `V = -(γθ + Σ∇ℓ(θ))`.
pub fn residual_noise(design: &LogisticDesign, theta: &[f64], gamma: f64) -> Vec<f64> {
    let g = logistic_gradient(design, theta);
    theta.iter().zip(g).map(|(t, gj)| -(gamma * t + gj)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

fn cholesky_solve(a: &mut [f64], b: &mut [f64], d: usize) -> Option<()> {
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k] * a[j * d + k];
        }
        if !(s > 0.0) {
            return None;
        }
        let l = s.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
    }
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * d + k] * b[k];
        }
        b[i] = s / a[i * d + i];
    }
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= a[k * d + i] * b[k];
        }
        b[i] = s / a[i * d + i];
    }
    Some(())
}

/// Minimize `Σℓ(θ; xᵢ, yᵢ) + (γ/2)θᵀθ + Vᵀθ` by damped Newton.
///
/// Stops once the gradient's ℓ∞ norm falls below
/// `tolerance · max(1, ‖V‖∞)`.
pub fn perturbed_minimizer(design: &LogisticDesign, gamma: f64, v: &[f64], opts: NewtonOptions) -> Result<Vec<f64>> {
    let d = design.dim;
    if v.len() != d {
        return Err(Error::Shape { expected: d, found: v.len() });
    }
    if !(gamma >= 0.0) {
        return Err(Error::ParameterDomain(format!("gamma must be nonnegative, got {gamma}")));
    }
    let vnorm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = opts.tolerance * vnorm.max(1.0);
    let objective = |theta: &[f64]| total_loss(design, theta) + 0.5 * gamma * dot(theta, theta) + dot(v, theta);

    let mut theta = vec![0.0; d];
    let mut f = objective(&theta);
    let mut grad_norm = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut grad = logistic_gradient(design, &theta);
        for j in 0..d {
            grad[j] += gamma * theta[j] + v[j];
        }
        grad_norm = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if grad_norm <= tol {
            return Ok(theta);
        }
        let mut hess = logistic_hessian(design, &theta);
        for j in 0..d {
            hess[j * d + j] += gamma + 1e-300;
        }
        let mut step = grad.clone();
        if cholesky_solve(&mut hess, &mut step, d).is_none() {
            step = grad.clone();
        }
        let slope = dot(&grad, &step);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let fc = objective(&cand);
            if fc <= f - 1e-4 * t * slope || slope <= 1e-12 * (1.0 + f.abs()) || t < 1e-12 {
                theta = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
    }
    let mut grad = logistic_gradient(design, &theta);
    for j in 0..d {
        grad[j] += gamma * theta[j] + v[j];
    }
    let final_norm = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if final_norm <= tol {
        return Ok(theta);
    }
    Err(Error::Optimization {
        iterations: opts.max_iterations,
        grad_norm: final_norm.min(grad_norm),
    })
}

/// Objective-perturbation release with `λ = d/4`. Returns `(θ_dp, V)`.
pub fn objective_perturbation<R: Rng + ?Sized>(
    design: &LogisticDesign,
    sensitivity: f64,
    epsilon: f64,
    q: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = design.dim;
    let lambda = d as f64 / 4.0;
    let gamma = objective_gamma(lambda, epsilon, q);
    if !(gamma > 0.0 && gamma.is_finite()) || !(q > 0.0 && q < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "objective perturbation needs q in (0,1) and finite gamma > 0 (q={q}, gamma={gamma})"
        )));
    }
    let v = knorm_linf_sample(epsilon * q / sensitivity, d, rng);
    let theta = perturbed_minimizer(design, gamma, &v, NewtonOptions::default())?;
    Ok((theta, v))
}

/// How the determinant term of the θ-density enters the acceptance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianConvention {
    /// `exp(-(ε_t q_t/Δ)‖V‖∞) · γ^d / Π(γ + λᵢ)`.
    #[default]
    Published,
    /// `exp(-(ε_t q_t/Δ)‖V‖∞) · Π(γ + λᵢ) / (γ + nλ/d)^d`, the release density of θ
    /// over an upper bound of its supremum.
    ChangeOfVariables,
}

/// Log acceptance probability for a synthetic dataset given a released θ.
pub fn objperb_log_acceptance(
    theta_dp: &[f64],
    design: &LogisticDesign,
    sensitivity: f64,
    epsilon_t: f64,
    q_t: f64,
    convention: JacobianConvention,
) -> Result<f64> {
    let d = design.dim;
    if theta_dp.len() != d {
        return Err(Error::Shape { expected: d, found: theta_dp.len() });
    }
    let lambda = d as f64 / 4.0;
    let gamma = objective_gamma(lambda, epsilon_t, q_t);
    let v = residual_noise(design, theta_dp, gamma);
    let vnorm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eig = symmetric_eigenvalues(&logistic_hessian(design, theta_dp), d)?;
    let log_det: f64 = eig.iter().map(|l| (gamma + l.max(0.0)).ln()).sum();
    let exponent = -(epsilon_t * q_t / sensitivity) * vnorm;
    let out = match convention {
        JacobianConvention::Published => exponent + d as f64 * gamma.ln() - log_det,
        JacobianConvention::ChangeOfVariables => {
            let bound = gamma + design.n() as f64 * lambda / d as f64;
            exponent + log_det - d as f64 * bound.ln()
        }
    };
    if out.is_nan() {
        return Err(Error::Numeric("objective-perturbation acceptance is NaN".into()));
    }
    Ok(out.min(0.0))
}

pub fn objperb_acceptance(
    theta_dp: &[f64],
    design: &LogisticDesign,
    sensitivity: f64,
    epsilon_t: f64,
    q_t: f64,
) -> Result<f64> {
    objperb_log_acceptance(theta_dp, design, sensitivity, epsilon_t, q_t, JacobianConvention::Published).map(f64::exp)
}

/// Log density of the released θ under `design`, by change of variables from V.
pub fn objective_release_log_density(
    theta: &[f64],
    design: &LogisticDesign,
    sensitivity: f64,
    epsilon: f64,
    q: f64,
) -> Result<f64> {
    let d = design.dim;
    let lambda = d as f64 / 4.0;
    let gamma = objective_gamma(lambda, epsilon, q);
    let c = epsilon * q / sensitivity;
    let v = residual_noise(design, theta, gamma);
    let vnorm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let df = d as f64;
    let log_norm = df * c.ln() - df * std::f64::consts::LN_2 - crate::special::ln_gamma(df + 1.0);
    let eig = symmetric_eigenvalues(&logistic_hessian(design, theta), d)?;
    let log_det: f64 = eig.iter().map(|l| (gamma + l.max(0.0)).ln()).sum();
    Ok(log_norm - c * vnorm + log_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn toy_design() -> LogisticDesign {
        let z = [0.1, 0.4, 0.35, 0.8, 0.9, 0.6, 0.2, 0.75];
        let y = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        LogisticDesign::with_intercept(&z, &y).unwrap()
    }

    #[test]
    fn gamma_formula() {
        let g = objective_gamma(0.5, 0.45, 0.5);
        assert!((g - 0.5 / (0.225f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn stationarity_recovers_noise() {
        let design = toy_design();
        let mut rng = RandomStream::from_parts(3, 0, 0, 0);
        let (theta, v) = objective_perturbation(&design, 2.0, 0.45, 0.5, &mut rng).unwrap();
        let gamma = objective_gamma(0.5, 0.45, 0.5);
        let rec = residual_noise(&design, &theta, gamma);
        for (a, b) in rec.iter().zip(&v) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn unperturbed_limit_is_mle() {
        let design = toy_design();
        let mle = perturbed_minimizer(&design, 0.0, &[0.0, 0.0], NewtonOptions::default()).unwrap();
        let near = perturbed_minimizer(&design, 1e-10, &[0.0, 0.0], NewtonOptions::default()).unwrap();
        let g = logistic_gradient(&design, &mle);
        assert!(g.iter().all(|x| x.abs() < 1e-8));
        for (a, b) in mle.iter().zip(&near) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn eigenvalues_closed_form_matches_general() {
        let m = [2.0, 0.7, 0.7, 1.1];
        let e2 = symmetric_eigenvalues(&m, 2).unwrap();
        let full = SymmetricEigen::new(DMatrix::from_row_slice(2, 2, &m)).eigenvalues;
        let mut f: Vec<f64> = full.iter().copied().collect();
        f.sort_by(f64::total_cmp);
        for (a, b) in e2.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(symmetric_eigenvalues(&[f64::NAN, 0.0, 0.0, 1.0], 2).is_err());
    }

    #[test]
    fn acceptance_unity_when_no_curvature() {
        let design = LogisticDesign::new(vec![0.0, 0.0], vec![0.0], 2).unwrap();
        let r = objperb_acceptance(&[0.0, 0.0], &design, 2.0, 0.45, 0.5).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acceptance_decreases_with_noise() {
        let design = toy_design();
        let gamma = objective_gamma(0.5, 0.45, 0.5);
        let theta0 = perturbed_minimizer(&design, gamma, &[0.0, 0.0], NewtonOptions::default()).unwrap();
        let r0 = objperb_acceptance(&theta0, &design, 2.0, 0.45, 0.5).unwrap();
        let eig = symmetric_eigenvalues(&logistic_hessian(&design, &theta0), 2).unwrap();
        let expect = gamma.powi(2) / eig.iter().map(|l| gamma + l).product::<f64>();
        assert!((r0 - expect).abs() < 1e-9);
        for conv in [JacobianConvention::Published, JacobianConvention::ChangeOfVariables] {
            let la = objperb_log_acceptance(&theta0, &design, 2.0, 0.45, 0.5, conv).unwrap();
            assert!(la <= 0.0);
        }
    }
}
