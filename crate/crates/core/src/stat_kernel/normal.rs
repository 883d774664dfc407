use std::f64::consts::FRAC_1_SQRT_2;

use libm::erfc;

use crate::error::{domain, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(z), computed without cancellation for large `z`.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of Φ. Fails for `p` outside the open unit interval.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile needs 0 < p < 1, got {p}"));
    }
    Ok(quantile_unchecked(p))
}

/// Φ⁻¹(1 − p) for an upper-tail probability `p`, accurate when `p` is tiny.
pub fn std_normal_upper_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile needs 0 < p < 1, got {p}"));
    }
    Ok(-quantile_unchecked(p))
}

/// Wichura's AS 241 (PPND16) followed by one Halley step against `erfc`.
pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = as241(p);
    if !x.is_finite() {
        return x;
    }
    // Refine on the tail that carries the precision.
    let err = if x < 0.0 { std_normal_cdf(x) - p } else { (1.0 - p) - std_normal_sf(x) };
    let u = err / std_normal_pdf(x);
    if u.is_finite() {
        x - u / (1.0 + 0.5 * x * u)
    } else {
        x
    }
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        133.141_667_891_784_38,
        1_971.590_950_306_551_3,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_597,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_545,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_546,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_08,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_888,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.043_131_051_931_188_3e-15,
    ];
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision reference values (40-digit arithmetic).
    const CDF_REFERENCE: &[(f64, f64)] = &[
        (1.959964, 0.975_000_000_903_557_6),
        (-1.959964, 0.024_999_999_096_442_404),
        (1.0, 0.841_344_746_068_542_9),
        (-3.0, 0.001_349_898_031_630_094_5),
        (5.0, 0.999_999_713_348_428_1),
    ];

    #[test]
    fn cdf_matches_reference() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for &(z, want) in CDF_REFERENCE {
            assert!((std_normal_cdf(z) - want).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn far_tail() {
        // Mills-ratio bound: φ(z)/|z| · (1 − 1/z²) < Φ(z) < φ(z)/|z| for z ≪ 0.
        let z = -8.0_f64;
        let upper = std_normal_pdf(z) / z.abs();
        let lower = upper * (1.0 - 1.0 / (z * z));
        let got = std_normal_cdf(z);
        assert!(got < 1e-15);
        assert!(got > lower && got < upper);
        assert!((got - 6.220_960_574_271_784e-16).abs() / 6.22e-16 < 1e-10);
        assert!(std_normal_sf(20.0) > 0.0);
    }

    #[test]
    fn symmetry() {
        for i in -400..=400 {
            let z = f64::from(i) * 0.02;
            assert!((std_normal_cdf(z) + std_normal_cdf(-z) - 1.0).abs() < 1e-12);
            assert!((std_normal_sf(z) - std_normal_cdf(-z)).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_reference() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let q = std_normal_quantile(0.975).unwrap();
        assert!((q - 1.959_963_984_540_054).abs() < 1e-12);
        let q = std_normal_quantile(0.025).unwrap();
        assert!((q + 1.959_963_984_540_054).abs() < 1e-12);
        let q = std_normal_quantile(1.0 - 1e-11).unwrap();
        assert!(q.is_finite());
        assert!((q - 6.706_023_155_495_136).abs() < 1e-5);
        let q = std_normal_upper_quantile(1e-10).unwrap();
        assert!((q - 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn cdf_monotone() {
        let mut prev = 0.0;
        for i in -1000..=1000 {
            let v = std_normal_cdf(f64::from(i) * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }
}
