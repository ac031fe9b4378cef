//! Special functions shared across modules.

use statrs::function::erf::erfc;

pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// ln C(n, k) via log-gamma.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Standard normal CDF, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// log-sum-exp over a slice; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Quantile of the standard normal distribution.
///
/// Wichura's AS241 (PPND16) rational approximation, relative accuracy about 1e-16.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_W: [f64; 5] = [
    0.295_524_224_714_753,
    0.269_266_719_309_996_5,
    0.219_086_362_515_982,
    0.149_451_349_150_580_4,
    0.066_671_344_308_688_07,
];

/// `P(X > h, Y > k)` for a standard bivariate normal with correlation `rho`.
///
/// Plackett's integral over `[0, asin rho]` by composite Gauss-Legendre.
pub fn bvn_upper(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return norm_cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    let base = norm_cdf(-h) * norm_cdf(-k);
    let rho = rho.clamp(-1.0, 1.0);
    if rho == 0.0 {
        return base;
    }
    let end = rho.asin();
    const PANELS: usize = 16;
    let width = end / PANELS as f64;
    let hs = h * h + k * k;
    let hk = h * k;
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        (-(hs - 2.0 * hk * s) / (2.0 * c * c)).exp()
    };
    let mut acc = 0.0;
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (x, w) in GL10_X.iter().zip(GL10_W) {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
    }
    (base + acc * 0.5 * width / (2.0 * std::f64::consts::PI)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(0.05) + 1.644_853_626_951_472_2).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = normal_quantile(p);
            // erfc from statrs is good to roughly 1e-11 relative
            assert!((norm_cdf(x) - p).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn lse_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bvn_orthant_closed_form() {
        for rho in [-0.95, -0.5, 0.0, 0.3, 0.8, 0.99] {
            let expect = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
            assert!((bvn_upper(0.0, 0.0, rho) - expect).abs() < 1e-12, "rho = {rho}: {} vs {expect}", bvn_upper(0.0, 0.0, rho));
        }
    }

    #[test]
    fn bvn_matches_conditional_integral() {
        // P(X > h, Y > k) = ∫_h^∞ φ(x) Φ((ρx - k)/sqrt(1-ρ²)) dx by Simpson.
        let reference = |h: f64, k: f64, rho: f64| {
            let s = (1.0 - rho * rho).sqrt();
            let (a, b) = (h, 12.0);
            let m = 200_000;
            let dx = (b - a) / m as f64;
            let g = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt() * norm_cdf((rho * x - k) / s);
            let mut acc = g(a) + g(b);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * dx);
            }
            acc * dx / 3.0
        };
        for &(h, k, rho) in &[(0.3, -1.2, 0.6), (-2.0, 0.5, -0.4), (1.5, 1.0, 0.97), (-0.7, -0.7, -0.9)] {
            let got = bvn_upper(h, k, rho);
            let want = reference(h, k, rho);
            assert!((got - want).abs() < 1e-9, "({h}, {k}, {rho}): {got} vs {want}");
        }
        assert_eq!(bvn_upper(f64::NEG_INFINITY, 0.0, 0.5), 0.5);
    }
}
