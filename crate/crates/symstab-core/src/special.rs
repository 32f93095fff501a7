//! Scalar special functions used throughout the crate.
//!
//! The error function and log-gamma come from `libm` (musl-derived, ~1 ulp);
//! the regularized incomplete gamma comes from `statrs`. On top of those sit
//! the handful of small helpers (standard normal density/CDF/quantile,
//! double factorials) that the rest of the crate keeps reaching for.

use crate::{Error, Result};
use statrs::function::gamma;

/// 1/√(2π), the standard normal density at 0.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x), accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for p in (0,1).
///
/// Bisection brackets the root, then Newton corrections push the result to
/// full double precision.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(Error::invalid("p", format!("{p} is outside (0,1)")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let err = normal_cdf(x) - p;
        let d = normal_pdf(x);
        if d > 0.0 {
            let step = err / d;
            if step.is_finite() {
                x -= step;
            }
        }
    }
    Ok(x)
}

/// Natural log of |Γ(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Gamma function Γ(x).
pub fn gamma_fn(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Regularized lower incomplete gamma P(a, x) = γ(a,x)/Γ(a).
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 {
        return Err(Error::invalid("a", "shape must be positive"));
    }
    if x < 0.0 {
        return Err(Error::invalid("x", "argument must be nonnegative"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma::gamma_lr(a, x))
}

/// Double factorial k!! with the empty-product conventions 0!! = (−1)!! = 1.
pub fn double_factorial(k: i64) -> f64 {
    if k <= 0 {
        return 1.0;
    }
    let mut acc = 1.0;
    let mut m = k;
    while m > 0 {
        acc *= m as f64;
        m -= 2;
    }
    acc
}

/// Clamp a floating-point probability into [0, 1].
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}
