//! Standard normal CDF and quantile in double precision.
//!
//! The CDF uses Cody's rational Chebyshev approximations with the exponent
//! split into an exactly representable part, which keeps the lower tail at
//! full relative precision down to the normal/subnormal boundary (t ≈ −37.5)
//! and gives a finite log-CDF for any finite argument. The quantile is
//! Wichura's AS241 (PPND16) and accepts either a probability or its
//! logarithm, so tail masses far below `f64::MIN_POSITIVE` can still be
//! inverted.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;
const SQRT_32: f64 = 5.656_854_249_492_380_195_206_754_896_838;

const A: [f64; 5] = [
    2.235_252_035_460_683_928_7,
    161.028_231_068_555_878_81,
    1_067.689_485_460_370_958_2,
    18_154.981_253_343_561_249,
    0.065_682_337_918_207_449_113,
];
const B: [f64; 4] = [
    47.202_581_904_688_241_87,
    976.098_551_737_776_693_22,
    10_260.932_208_618_978_205,
    45_507.789_335_026_729_956,
];
const C: [f64; 9] = [
    0.398_941_512_088_134_667_64,
    8.883_149_794_388_375_941_2,
    93.506_656_132_177_855_979,
    597.270_276_394_800_262_26,
    2_494.537_585_290_372_671_1,
    6_848.190_450_536_282_332_6,
    11_602.651_437_647_350_124,
    9_842.714_838_383_978_021_8,
    1.076_557_677_372_019_231_7e-8,
];
const D: [f64; 8] = [
    22.266_688_044_328_115_691,
    235.387_901_782_624_998_61,
    1_519.377_599_407_554_805,
    6_485.558_298_266_760_755,
    18_615.571_640_885_098_091,
    34_900.952_721_145_977_266,
    38_912.003_286_093_271_411,
    19_685.429_676_859_990_727,
];
const P: [f64; 6] = [
    0.215_898_534_057_956_99,
    0.127_401_161_160_247_363_9,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_466,
    2.911_287_495_116_879_2e-5,
    0.023_073_441_764_940_173_03,
];
const Q: [f64; 5] = [
    1.284_260_096_144_911_21,
    0.468_238_212_480_865_118,
    0.065_988_137_868_928_551_5,
    0.003_782_396_332_027_582_44,
    7.297_515_550_839_662_05e-5,
];

/// Φ(t) together with ln Φ(t).
#[derive(Debug, Clone, Copy)]
struct Tails {
    lower: f64,
    ln_lower: f64,
}

fn tails(t: f64) -> Tails {
    let y = t.abs();
    if y <= 0.674_489_75 {
        let (mut num, mut den) = (0.0, 0.0);
        if y > f64::EPSILON * 0.5 {
            let tsq = t * t;
            num = A[4] * tsq;
            den = tsq;
            for i in 0..3 {
                num = (num + A[i]) * tsq;
                den = (den + B[i]) * tsq;
            }
        }
        let temp = t * (num + A[3]) / (den + B[3]);
        let lower = 0.5 + temp;
        return Tails {
            lower,
            ln_lower: lower.ln(),
        };
    }

    let ratio = if y <= SQRT_32 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7])
    } else {
        let ysq = 1.0 / (y * y);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let temp = ysq * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_2PI - temp) / y
    };

    // exp(-y²/2) with y² split as ysq16² + del, ysq16 having few mantissa bits.
    let y16 = (y * 16.0).trunc() / 16.0;
    let del = (y - y16) * (y + y16);
    let ln_small = -y16 * y16 * 0.5 - del * 0.5 + ratio.ln();
    let small = if ln_small > -700.0 {
        (-y16 * y16 * 0.5).exp() * (-del * 0.5).exp() * ratio
    } else {
        ln_small.exp()
    };

    if t > 0.0 {
        Tails {
            lower: 1.0 - small,
            ln_lower: (-small).ln_1p(),
        }
    } else {
        Tails {
            lower: small,
            ln_lower: ln_small,
        }
    }
}

/// Φ(t), the standard normal CDF.
pub fn std_normal_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    tails(t).lower
}

/// ln Φ(t). Finite for every finite `t`.
pub fn std_normal_log_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    tails(t).ln_lower
}

/// Standard normal density φ(t).
pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t - LN_SQRT_2PI).exp()
}

/// Φ⁻¹(u) for u in the open unit interval.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::invalid(format!(
            "normal quantile needs u in (0, 1), got {u}"
        )));
    }
    Ok(ppnd16(u - 0.5, u.min(1.0 - u).ln()))
}

/// Φ⁻¹(exp(ln_u)) for ln_u < 0. Accepts log-probabilities far below the
/// smallest representable double.
pub fn std_normal_quantile_ln(ln_u: f64) -> Result<f64> {
    if !(ln_u < 0.0) || ln_u.is_infinite() {
        return Err(Error::invalid(format!(
            "log-domain normal quantile needs ln u in (-inf, 0), got {ln_u}"
        )));
    }
    let u = ln_u.exp();
    if u > 0.075 {
        // Central region: the plain probability carries full precision.
        return std_normal_quantile(u);
    }
    // Lower tail: min(u, 1-u) = u, so its log is exactly ln_u.
    let x = ppnd16(u - 0.5, ln_u);
    Ok(refine_lower_tail(x, ln_u))
}

/// AS241 core. `q = u - 1/2`; `ln_tail = ln(min(u, 1-u))`.
fn ppnd16(q: f64, ln_tail: f64) -> f64 {
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2_509.080_928_730_122_672_7 + 33_430.575_583_588_128_105) * r
                + 67_265.770_927_008_700_853)
                * r
                + 45_921.953_931_549_871_457)
                * r
                + 13_731.693_765_509_461_125)
                * r
                + 1_971.590_950_306_551_442_7)
                * r
                + 133.141_667_891_784_377_45)
                * r
                + 3.387_132_872_796_366_608)
            / (((((((r * 5_226.495_278_852_545_925 + 28_729.085_735_721_942_674) * r
                + 39_307.895_800_092_710_61)
                * r
                + 21_213.794_301_586_595_867)
                * r
                + 5_394.196_021_424_751_107_7)
                * r
                + 687.187_007_492_057_908_3)
                * r
                + 42.313_330_701_600_911_252)
                * r
                + 1.0);
    }

    let mut r = (-ln_tail).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414_076_4e-4 + 0.022_723_844_989_269_184_583_3) * r
            + 0.241_780_725_177_450_611_77)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34)
            / (((((((r * 1.050_750_071_644_416_843_24e-9 + 5.475_938_084_995_344_946e-4) * r
                + 0.015_198_666_563_616_457_196_6)
                * r
                + 0.148_103_976_427_480_074_59)
                * r
                + 0.689_767_334_985_100_004_55)
                * r
                + 1.676_384_830_183_803_849_4)
                * r
                + 2.053_191_626_637_758_821_87)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_132_65e-7 + 2.711_555_568_743_487_578_15e-5) * r
            + 0.001_242_660_947_388_078_438_6)
            * r
            + 0.026_532_189_526_576_123_093)
            * r
            + 0.296_560_571_828_504_891_23)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2)
            / (((((((r * 2.044_263_103_389_939_785_64e-15 + 1.421_511_758_316_445_888_7e-7)
                * r
                + 1.846_318_317_510_054_681_8e-5)
                * r
                + 7.868_691_311_456_132_591e-4)
                * r
                + 0.014_875_361_290_850_614_852_5)
                * r
                + 0.136_929_880_922_735_805_31)
                * r
                + 0.599_832_206_555_887_937_69)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Newton iterations on ln Φ(x) = ln_u. AS241 is only tuned for tails down
/// to about 1e-300; beyond that the rational fit drifts and this pulls it back.
fn refine_lower_tail(mut x: f64, ln_u: f64) -> f64 {
    for _ in 0..8 {
        let ln_cdf = std_normal_log_cdf(x);
        // d/dx ln Φ(x) = φ(x)/Φ(x), evaluated in log space.
        let slope = (-0.5 * x * x - LN_SQRT_2PI - ln_cdf).exp();
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        let step = (ln_cdf - ln_u) / slope;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 50-digit arithmetic (erfc-based).
    const PHI_REF: &[(f64, f64)] = &[
        (-37.0, 5.725_571_222_524_576_822_7e-300),
        (-30.0, 4.906_713_927_148_187_059_5e-198),
        (-20.0, 2.753_624_118_606_233_695_1e-89),
        (-10.0, 7.619_853_024_160_526_066e-24),
        (-8.0, 6.220_960_574_271_784_123_5e-16),
        (-5.0, 2.866_515_718_791_939_116_7e-7),
        (-3.0, 1.349_898_031_630_094_526_7e-3),
        (-2.0, 0.022_750_131_948_179_207_2),
        (-1.0, 0.158_655_253_931_457_051_41),
        (-0.3, 0.382_088_577_811_047_366_93),
        (0.5, 0.691_462_461_274_013_103_64),
        (1.0, 0.841_344_746_068_542_948_59),
        (2.0, 0.977_249_868_051_820_792_8),
        (3.0, 0.998_650_101_968_369_905_47),
        (8.0, 0.999_999_999_999_999_377_9),
    ];

    #[test]
    fn cdf_matches_high_precision_reference() {
        for &(t, want) in PHI_REF {
            let got = std_normal_cdf(t);
            let rel = ((got - want) / want).abs();
            assert!(
                rel <= 1e-14,
                "t={t}: got {got:e}, want {want:e}, rel {rel:e}"
            );
        }
    }

    #[test]
    fn cdf_center_and_symmetry() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        let mut t = -8.0;
        while t <= 8.0 {
            let s = std_normal_cdf(t) + std_normal_cdf(-t);
            assert!((s - 1.0).abs() <= 1e-14, "t={t}: sum {s}");
            t += 0.0625;
        }
    }

    #[test]
    fn log_cdf_deep_tail() {
        // ln Φ(-40) and ln Φ(-100), 50-digit reference.
        assert!((std_normal_log_cdf(-40.0) - -804.608_442_013_753_788_17).abs() < 1e-10);
        assert!((std_normal_log_cdf(-100.0) - -5_005.524_208_694_205_088_6).abs() < 1e-9);
        assert!((std_normal_log_cdf(-1.0) - 0.158_655_253_931_457_05_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn no_underflow_until_38() {
        assert!(std_normal_cdf(-38.0) > 0.0);
        assert!(std_normal_cdf(-37.5) >= f64::MIN_POSITIVE);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let q = std_normal_quantile(0.25).unwrap();
        assert!((q - -0.674_489_750_196_081_743_2).abs() < 1e-15);
        let back = std_normal_quantile(std_normal_cdf(-10.0)).unwrap();
        assert!((back + 10.0).abs() < 1e-8);
        assert!(std_normal_quantile(1e-300).unwrap() < -37.0);
    }

    #[test]
    fn quantile_rejects_closed_interval() {
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
        assert!(std_normal_quantile_ln(0.0).is_err());
        assert!(std_normal_quantile_ln(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn quantile_roundtrip_relative() {
        for k in 1..300 {
            let u = 10f64.powf(-(k as f64));
            let x = std_normal_quantile(u).unwrap();
            let rel = ((std_normal_cdf(x) - u) / u).abs();
            assert!(rel <= 1e-12, "u=1e-{k}: rel {rel:e}");
        }
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let x = std_normal_quantile(u).unwrap();
            assert!(((std_normal_cdf(x) - u) / u).abs() <= 1e-12, "u={u}");
        }
    }

    #[test]
    fn log_quantile_far_tail() {
        for &t in &[40.0, 100.0, 500.0] {
            let x = std_normal_quantile_ln(std_normal_log_cdf(-t)).unwrap();
            assert!((x + t).abs() <= 1e-9 * t, "t={t}: x={x}");
        }
        let direct = std_normal_quantile(0.01).unwrap();
        let via_ln = std_normal_quantile_ln(0.01f64.ln()).unwrap();
        assert!((direct - via_ln).abs() < 1e-13);
    }
}
