use rand::Rng;

use crate::dist::sample_gamma;

/// Draw `V ∈ R^d` with density ∝ exp(-c ‖V‖∞).
///
/// `V = R · U` with `R ~ Gamma(shape d + 1, rate c)` and `U` uniform on the unit
/// ℓ∞ ball (independent `Uniform(-1, 1)` coordinates).
pub fn knorm_linf_sample<R: Rng + ?Sized>(c: f64, d: usize, rng: &mut R) -> Vec<f64> {
    assert!(c > 0.0, "K-norm rate must be positive");
    let radius = sample_gamma(rng, d as f64 + 1.0) / c;
    (0..d)
        .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
        .collect()
}

/// ℓ∞ K-norm release: `stats + V` with `c = ε / Δ`.
pub fn knorm_release<R: Rng + ?Sized>(stats: &[f64], sensitivity: f64, epsilon: f64, rng: &mut R) -> Vec<f64> {
    if epsilon.is_infinite() {
        return stats.to_vec();
    }
    let noise = knorm_linf_sample(epsilon / sensitivity, stats.len(), rng);
    stats.iter().zip(noise).map(|(s, v)| s + v).collect()
}

#[inline]
pub fn knorm_log_acceptance(stats: &[f64], z_dp: &[f64], sensitivity: f64, epsilon_t: f64) -> f64 {
    debug_assert_eq!(stats.len(), z_dp.len());
    let linf = stats
        .iter()
        .zip(z_dp)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    -(epsilon_t / sensitivity) * linf
}

/// `exp(-(ε_t/Δ) ‖stats - z_dp‖∞)`.
pub fn knorm_acceptance(stats: &[f64], z_dp: &[f64], sensitivity: f64, epsilon_t: f64) -> f64 {
    knorm_log_acceptance(stats, z_dp, sensitivity, epsilon_t).exp()
}
