use rand::Rng;

use crate::dist::sample_standard_laplace;

/// Add i.i.d. Laplace(Δ/ε) noise to every component. `Δ` must bound the joint
/// ℓ1 sensitivity of the whole vector for the release to be ε-DP.
pub fn laplace_release<R: Rng + ?Sized>(stats: &[f64], sensitivity: f64, epsilon: f64, rng: &mut R) -> Vec<f64> {
    let scale = sensitivity / epsilon;
    stats
        .iter()
        .map(|&s| s + scale * sample_standard_laplace(rng))
        .collect()
}

/// `-(ε_t/Δ) · Σ|s_dp,i - stats_i|`.
#[inline]
pub fn laplace_log_acceptance(stats: &[f64], s_dp: &[f64], sensitivity: f64, epsilon_t: f64) -> f64 {
    debug_assert_eq!(stats.len(), s_dp.len());
    let l1: f64 = stats.iter().zip(s_dp).map(|(a, b)| (a - b).abs()).sum();
    -(epsilon_t / sensitivity) * l1
}

/// Acceptance probability for the Laplace mechanism, in (0, 1].
pub fn laplace_acceptance(stats: &[f64], s_dp: &[f64], sensitivity: f64, epsilon_t: f64) -> f64 {
    laplace_log_acceptance(stats, s_dp, sensitivity, epsilon_t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn acceptance_examples() {
        assert_eq!(laplace_acceptance(&[1.0, 2.0], &[1.0, 2.0], 3.0, 1.0), 1.0);
        let r = laplace_acceptance(&[3.0, 0.0], &[0.0, 0.0], 3.0, 1.0);
        assert!((r - (-1.0f64).exp()).abs() < 1e-15);
        let r = laplace_acceptance(&[3.0, 0.0], &[0.0, 0.0], 3.0, 0.5);
        assert!((r - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_limit() {
        let mut rng = RandomStream::from_parts(1, 0, 0, 0);
        let out = laplace_release(&[1.5, -2.0], 3.0, f64::INFINITY, &mut rng);
        assert_eq!(out, vec![1.5, -2.0]);
    }
}
