//! Multinomial resampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Categorical sampler over a fixed probability vector (inverse-CDF with binary search).
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    /// Weights must be nonnegative and finite; they are normalized internally.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateWeights("empty weight vector".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::DegenerateWeights(format!("weight {i} is {w}")));
            }
            acc += w;
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::DegenerateWeights("all weights are zero".into()));
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Self { cumulative })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // first index with cumulative > u; zero-weight entries are never selected
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}

/// `count` i.i.d. categorical draws (0-based indices) with the given probabilities.
///
/// The weights must already be a probability vector (sum 1 within 1e-12).
pub fn multinomial_resample<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::DegenerateWeights(format!(
            "weights sum to {total}, expected a probability vector"
        )));
    }
    let cat = Categorical::new(weights)?;
    Ok((0..count).map(|_| cat.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn point_mass() {
        let mut rng = RandomStream::from_parts(3, 0, 0, 0);
        let idx = multinomial_resample(&[1.0, 0.0, 0.0], 5, &mut rng).unwrap();
        assert_eq!(idx, vec![0; 5]);
    }

    #[test]
    fn two_equal_weights_single_draw() {
        let mut rng = RandomStream::from_parts(3, 0, 0, 1);
        let idx = multinomial_resample(&[0.5, 0.5], 1, &mut rng).unwrap();
        assert_eq!(idx.len(), 1);
        assert!(idx[0] < 2);
    }

    #[test]
    fn zero_weights_error() {
        let mut rng = RandomStream::from_parts(3, 0, 0, 2);
        assert!(matches!(
            multinomial_resample(&[0.0, 0.0], 3, &mut rng),
            Err(Error::DegenerateWeights(_))
        ));
        assert!(matches!(
            multinomial_resample(&[0.3, 0.3], 3, &mut rng),
            Err(Error::DegenerateWeights(_))
        ));
    }

    #[test]
    fn zero_weight_never_selected() {
        let mut rng = RandomStream::from_parts(3, 0, 0, 3);
        let idx = multinomial_resample(&[0.0, 0.5, 0.0, 0.5, 0.0], 10_000, &mut rng).unwrap();
        assert!(idx.iter().all(|&i| i == 1 || i == 3));
    }
}
