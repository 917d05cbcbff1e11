//! Gamma-family special functions needed for closed-form measure moments.

use core::f64::consts::PI;

use crate::error::{domain, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Γ(x).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Normalising constant `sin((α−1)π)·Γ(α)/π` that turns `e^{-ξ} ξ^{-α} dξ`
/// into a measure whose exponential-compensated integral is `1 − (1−u)^{α−1}`.
pub fn gamma_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain("gamma constant needs alpha in (1, 2)"));
    }
    Ok(libm::sin((alpha - 1.0) * PI) * gamma(alpha) / PI)
}

/// Lower incomplete gamma `γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt` for `a > 0`, `x ≥ 0`.
pub fn lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(domain("lower incomplete gamma needs a > 0 and x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(lower_series(a, x))
    } else {
        Ok(gamma(a) - upper_cf(a, x))
    }
}

/// Upper incomplete gamma `Γ(a, x) = ∫ₓ^∞ t^{a−1} e^{−t} dt` for `a > −1`, `x > 0`.
///
/// Negative `a` is reached through `Γ(a, x) = (Γ(a+1, x) − x^a e^{−x}) / a`;
/// `a = 0` is the exponential integral `E₁(x)`.
pub fn upper_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > -1.0) || !(x > 0.0) || !x.is_finite() {
        return Err(domain("upper incomplete gamma needs a > -1 and x > 0"));
    }
    if x >= (a + 1.0).max(1.0) {
        return Ok(upper_cf(a, x));
    }
    if a > 0.0 {
        return Ok(gamma(a) - lower_series(a, x));
    }
    if a == 0.0 {
        return Ok(exp_integral_e1_series(x));
    }
    let shifted = gamma(a + 1.0) - lower_series(a + 1.0, x);
    Ok((shifted - libm::exp(a * libm::log(x) - x)) / a)
}

// γ(a, x) = x^a e^{-x} Σ x^n / (a (a+1) … (a+n))
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * libm::exp(a * libm::log(x) - x)
}

// Modified Lentz evaluation of the Legendre continued fraction for Γ(a, x).
fn upper_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    libm::exp(a * libm::log(x) - x) * h
}

fn exp_integral_e1_series(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..MAX_ITER {
        let k = n as f64;
        term *= -x / k;
        let add = -term / k;
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - libm::log(x) + sum
}
