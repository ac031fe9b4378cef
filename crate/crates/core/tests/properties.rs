use dppf::estimators::{ess_hat, variance_hat, weighted_mean, EstimateReport};
use dppf::mechanism::{clamp_normalize, knorm_acceptance, laplace_acceptance, ClampSpec};
use dppf::models::{BernoulliToy, LinRegConjugate, LinRegNonConjugate, LocScaleNormal, Model};
use dppf::pf::normalize_log;
use dppf::rng::RandomStream;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..10.0, 2..60)
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Replace one record of a simulated dataset with `row` and return the ℓ1
/// change in the summaries.
fn summary_shift(model: &dyn Model, seed: u64, index: usize, row: &[f64]) -> f64 {
    let mut rng = RandomStream::from_parts(seed, 0, 0, 0);
    let data = model.simulate_data(&model.default_truth(), &mut rng);
    let mut raw = data.raw.clone();
    let i = index % data.rows();
    raw[i * data.ncols..(i + 1) * data.ncols].copy_from_slice(row);
    let a = model.summary_stats(&data.raw);
    let b = model.summary_stats(&raw);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ess_is_scale_invariant(w in weights(), c in 1e-8f64..1e8) {
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let (a, b) = (ess_hat(&w).unwrap(), ess_hat(&scaled).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!(a >= 1.0 - 1e-12 && a <= w.len() as f64 + 1e-9);
    }

    #[test]
    fn variance_is_nonnegative(w in weights(), seed in 0u64..1000) {
        let w = normalized(&w);
        let mut rng = RandomStream::from_parts(seed, 1, 0, 0);
        let v: Vec<f64> = w.iter().map(|_| rand::Rng::random::<f64>(&mut rng) * 10.0 - 5.0).collect();
        prop_assert!(variance_hat(&w, &v).unwrap() >= 0.0);
    }

    #[test]
    fn estimates_are_permutation_invariant(w in weights(), shift in 1usize..59) {
        let w = normalized(&w);
        let v: Vec<f64> = (0..w.len()).map(|i| (i as f64).sin()).collect();
        let k = shift % w.len();
        let (mut wr, mut vr) = (w.clone(), v.clone());
        wr.rotate_left(k);
        vr.rotate_left(k);
        let (a, b) = (weighted_mean(&w, &v).unwrap(), weighted_mean(&wr, &vr).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        let (a, b) = (variance_hat(&w, &v).unwrap(), variance_hat(&wr, &vr).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn interval_contains_estimate(w in weights()) {
        let w = normalized(&w);
        let pts: Vec<f64> = (0..w.len()).map(|i| (i as f64 * 0.37).cos()).collect();
        let r = EstimateReport::from_columns(&w, &pts, 1, 0.05).unwrap();
        prop_assert!(r.ci_lower[0] <= r.estimate[0] && r.estimate[0] <= r.ci_upper[0]);
    }

    #[test]
    fn log_normalization_sums_to_one(lw in prop::collection::vec(-800.0f64..800.0, 1..50)) {
        let w = normalize_log(&lw).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn clamp_is_idempotent_and_bounded(x in prop::collection::vec(-100.0f64..100.0, 1..20), lo in -10.0f64..0.0, width in 0.1f64..20.0) {
        let c = ClampSpec::new(lo, lo + width).unwrap();
        let once = clamp_normalize(&x, &c);
        prop_assert!(once.iter().all(|v| (-1.0..=1.0).contains(v)));
        let unit = ClampSpec::new(-1.0, 1.0).unwrap();
        let twice = clamp_normalize(&once, &unit);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn acceptance_is_a_probability(s in prop::collection::vec(-5.0f64..5.0, 3), t in prop::collection::vec(-5.0f64..5.0, 3), eps in 0.01f64..5.0) {
        let l = laplace_acceptance(&s, &t, 2.0, eps);
        let k = knorm_acceptance(&s, &t, 2.0, eps);
        prop_assert!(l > 0.0 && l <= 1.0 && k > 0.0 && k <= 1.0);
        prop_assert!(k >= l);
        prop_assert_eq!(laplace_acceptance(&s, &s, 2.0, eps), 1.0);
    }

    #[test]
    fn locscale_sensitivity_bounds_record_change(seed in 0u64..500, i in 0usize..50, y in -50.0f64..50.0) {
        let m = LocScaleNormal::new(50);
        prop_assert!(summary_shift(&m, seed, i, &[y]) <= m.sensitivity() + 1e-12);
    }

    #[test]
    fn linreg_sensitivity_bounds_record_change(seed in 0u64..500, i in 0usize..40, x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let m = LinRegNonConjugate::new(40);
        prop_assert!(summary_shift(&m, seed, i, &[x, y]) <= m.sensitivity() + 1e-12);
        let m = LinRegConjugate::new(40);
        prop_assert!(summary_shift(&m, seed, i, &[x, y]) <= m.sensitivity() + 1e-12);
    }

    #[test]
    fn bernoulli_sensitivity_bounds_record_change(seed in 0u64..500, i in 0usize..20, b in 0u8..2) {
        let m = BernoulliToy::new(20);
        prop_assert!(summary_shift(&m, seed, i, &[b as f64]) <= m.sensitivity());
    }
}
