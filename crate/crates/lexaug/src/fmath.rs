//! Portable f64 transcendentals.
//!
//! `std`'s `exp`/`ln`/`tanh`/`cos` dispatch to the platform libm, whose results
//! can differ by a few ULPs between platforms. Checkpoints and report tables
//! promise byte-identical output for identical runs, so every transcendental
//! on those paths goes through these functions instead. They are plain IEEE
//! f64 arithmetic (add/mul/sqrt and bit twiddling only) and therefore produce
//! the same bits everywhere. Accuracy is a few ULPs, far tighter than any
//! tolerance used in this crate.

// Cody-Waite split: LN2_HI's low mantissa bits are zero, so `k * LN2_HI`
// is exact for the |k| this reduction sees, and LN2_LO restores the rest
// of ln 2. These are deliberately not the library constants.
#[allow(clippy::excessive_precision)]
const LN2_HI: f64 = 6.931_471_803_691_238_16e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
#[allow(clippy::approx_constant)] // 1/ln2, spelled out: it pairs with the split above
const INV_LN2: f64 = 1.442_695_040_888_963_4;

/// e^x by range reduction x = k*ln2 + r, |r| <= ln2/2, then a Taylor
/// polynomial in r and an exact scale by 2^k.
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
    let k = (x * INV_LN2).round();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // |r| <= 0.3466; degree-13 Taylor keeps the truncation below 1e-17.
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=13 {
        term *= r / n as f64;
        sum += term;
    }
    scale_by_pow2(sum, k as i64)
}

fn scale_by_pow2(x: f64, k: i64) -> f64 {
    // Reachable k for finite nonzero exp() results: about -1075..=1024.
    if k > 1024 {
        return f64::INFINITY;
    }
    if k < -1075 {
        return 0.0;
    }
    if k == 1024 {
        // 2^1024 has no f64 representation; split exactly.
        return x * pow2(1023) * 2.0;
    }
    if k >= -1022 {
        return x * pow2(k);
    }
    // Deep negative: the first factor keeps the product normal (hence
    // exact), leaving a single rounding on the final multiply even when
    // the result is subnormal.
    x * pow2(-700) * pow2(k + 700)
}

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// Natural log via m*2^e decomposition with m in [sqrt(1/2), sqrt(2)) and
/// the atanh series ln(m) = 2*atanh((m-1)/(m+1)).
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
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = if e == -1023 {
        // Subnormal: renormalize.
        let m0 = x * pow2(100);
        let b = m0.to_bits();
        e = ((b >> 52) & 0x7ff) as i64 - 1023 - 100;
        f64::from_bits((b & 0x000f_ffff_ffff_ffff) | (1023u64 << 52))
    } else {
        f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52))
    };
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    let t = (m - 1.0) / (m + 1.0);
    let t2 = t * t;
    // |t| <= 0.1716; odd series to t^19.
    let mut term = t;
    let mut sum = t;
    for n in (3..=19).step_by(2) {
        term *= t2;
        sum += term / n as f64;
    }
    2.0 * sum + e as f64 * LN2_HI + e as f64 * LN2_LO
}

/// tanh via exp; exact sign symmetry, saturates for |x| >= 20.
pub fn tanh(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let t = if a < 1e-4 {
        // tanh(a) = a - a^3/3 + O(a^5); avoids 1 - exp cancellation.
        a - a * a * a / 3.0
    } else if a >= 20.0 {
        1.0
    } else {
        let e = exp(-2.0 * a);
        (1.0 - e) / (1.0 + e)
    };
    if x < 0.0 {
        -t
    } else {
        t
    }
}

/// Logistic sigmoid via exp.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// cos on all of R, reduced to [0, pi/2] by symmetry. Arguments here stay
/// within a few multiples of pi (learning-rate schedule), so the naive
/// k*pi reduction loses no meaningful precision.
pub fn cos(x: f64) -> f64 {
    if x.is_nan() || x.is_infinite() {
        return f64::NAN;
    }
    let a = x.abs();
    let k = (a / std::f64::consts::PI).floor();
    let mut r = a - k * std::f64::consts::PI; // r in [0, pi)
    let mut sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
    if r > std::f64::consts::FRAC_PI_2 {
        r = std::f64::consts::PI - r;
        sign = -sign;
    }
    // Even Taylor series to r^22 on [0, pi/2]; truncation < 2e-17.
    let r2 = r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=11 {
        term *= -r2 / ((2 * n - 1) as f64 * (2 * n) as f64);
        sum += term;
    }
    sign * sum
}

/// x^y for x > 0 via exp(y*ln x).
pub fn powf(x: f64, y: f64) -> f64 {
    exp(y * ln(x))
}
