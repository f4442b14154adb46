//! Deterministic transcendental functions.
//!
//! `libm` implementations of `exp`/`ln` are not guaranteed to produce the
//! same last bit on every platform, which would break the engine's promise
//! that a scenario report is byte-identical across machines. The versions
//! here use only IEEE-754 basic operations (+, −, ×, ÷, sqrt), all of which
//! are correctly rounded everywhere, so results are reproducible bit-for-bit.
//!
//! Accuracy is a few ulp for `exp`/`ln` and ~1.2e-9 relative for the normal
//! quantile (Acklam's rational approximation), far tighter than anything the
//! Monte Carlo layer is sensitive to.

use std::f64::consts::{LOG2_E, SQRT_2};

// Two-part ln(2): the head is truncated so `k·LN2_HI` is exact for the k
// range used in argument reduction.
#[allow(clippy::excessive_precision)]
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
#[allow(clippy::excessive_precision)]
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// e^x. Overflows to `+inf` above ~709.8 and underflows to 0 below ~−745.
pub fn exp(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 709.782712893384 {
        return f64::INFINITY;
    }
    if x < -745.2 {
        return 0.0;
    }
    // x = k·ln2 + r with |r| ≤ ln2/2; two-part ln2 keeps r accurate.
    let k = (x * LOG2_E).round();
    let r = (x - k * LN2_HI) - k * LN2_LO;

    // Taylor polynomial through r^13/13!; |r| ≤ 0.3466 puts the truncation
    // error below one ulp.
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0
                    + r * (1.0 / 24.0
                        + r * (1.0 / 120.0
                            + r * (1.0 / 720.0
                                + r * (1.0 / 5040.0
                                    + r * (1.0 / 40320.0
                                        + r * (1.0 / 362880.0
                                            + r * (1.0 / 3628800.0
                                                + r * (1.0 / 39916800.0
                                                    + r * (1.0 / 479001600.0
                                                        + r / 6227020800.0))))))))))));
    scale_by_pow2(p, k as i32)
}

/// p · 2^k via exponent arithmetic, handling the subnormal range.
fn scale_by_pow2(p: f64, k: i32) -> f64 {
    if k >= -1021 {
        if k > 1023 {
            return p * f64::from_bits(((1023 + 1023) as u64) << 52) * powi2(k - 1023);
        }
        p * f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        // Subnormal result: scale in two steps.
        p * f64::from_bits(2u64 << 52) * powi2(k - (-1021))
    }
}

fn powi2(k: i32) -> f64 {
    let kk = k.clamp(-1022, 1023);
    f64::from_bits(((kk + 1023) as u64) << 52)
}

/// Natural log. `x` must be positive and finite; other inputs return NaN
/// (callers in this crate validate their domains first).
pub fn ln(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut bits = x.to_bits();
    let mut e = 0i32;
    // Normalize subnormals.
    if bits < (1u64 << 52) {
        let scaled = x * f64::from_bits(((52 + 1023) as u64) << 52); // ×2^52
        bits = scaled.to_bits();
        e -= 52;
    }
    e += ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52)); // [1,2)
    if m > SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    // ln(m) = 2 atanh(s), s = (m−1)/(m+1), |s| ≤ 0.1716.
    let s = (m - 1.0) / (m + 1.0);
    let z = s * s;
    let series = 1.0
        + z * (1.0 / 3.0
            + z * (1.0 / 5.0
                + z * (1.0 / 7.0
                    + z * (1.0 / 9.0
                        + z * (1.0 / 11.0
                            + z * (1.0 / 13.0
                                + z * (1.0 / 15.0 + z * (1.0 / 17.0 + z / 19.0))))))));
    let ln_m = 2.0 * s * series;
    let ef = e as f64;
    (ln_m + ef * LN2_LO) + ef * LN2_HI
}

// Acklam's inverse normal CDF coefficients.
#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Standard normal quantile Φ⁻¹(p) for p in the open unit interval.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if p < P_LOW {
        let q = (-2.0 * ln(p)).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * ln(1.0 - p)).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

/// Maps a raw u64 draw to the open interval (0, 1) with 52-bit resolution;
/// never returns exactly 0 or 1 (the +0.5 offset stays representable at
/// 2^52, so the top value is exactly 1 − 2^−53).
pub fn u64_to_open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}
