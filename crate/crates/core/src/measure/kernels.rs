//! Integrand weights `k(ξ)·ρ(ξ)`, evaluated from `ξ` and the log-density.
//!
//! The log-density is passed split as `ln ρ(ξ) = base − tilt·ξ`, so that
//! large-ξ products such as `e^{uξ}·ρ(ξ)` are formed from the exponent
//! `base + (u − tilt)·ξ` without cancelling two huge numbers.

/// `ln ρ(ξ) = base − tilt·ξ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnDensity {
    pub base: f64,
    pub tilt: f64,
}

impl LnDensity {
    pub const fn new(base: f64, tilt: f64) -> Self {
        Self { base, tilt }
    }

    /// `ln ρ(ξ)`.
    #[inline]
    pub fn at(self, xi: f64) -> f64 {
        self.base - self.tilt * xi
    }

    /// `ln(e^{aξ} ρ(ξ))`.
    #[inline]
    pub fn shifted(self, xi: f64, a: f64) -> f64 {
        self.base + (a - self.tilt) * xi
    }

    #[inline]
    fn vanishes(self) -> bool {
        self.base == f64::NEG_INFINITY
    }

    #[inline]
    pub fn density(self, xi: f64) -> f64 {
        libm::exp(self.at(xi))
    }
}

/// Exponential growth rate and power of a kernel as `ξ → ∞`
/// (`k(ξ) ≍ ξ^power · e^{exp_rate·ξ}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailGrowth {
    pub exp_rate: f64,
    pub power: f64,
}

impl TailGrowth {
    pub const BOUNDED: TailGrowth = TailGrowth {
        exp_rate: 0.0,
        power: 0.0,
    };
    pub const LINEAR: TailGrowth = TailGrowth {
        exp_rate: 0.0,
        power: 1.0,
    };
    pub const EXPONENTIAL: TailGrowth = TailGrowth {
        exp_rate: 1.0,
        power: 0.0,
    };
}

const SERIES_CUTOFF: f64 = 0.1;
const LOG_SPACE_CUTOFF: f64 = 30.0;

/// `(e^{uξ} − 1 − u(e^ξ − 1))·ρ(ξ)`, the integrand of `R(u)` after folding the
/// drift `b·u` into the integral.
pub fn riccati(u: f64, xi: f64, d: LnDensity) -> f64 {
    if d.vanishes() {
        return 0.0;
    }
    if xi < SERIES_CUTOFF && xi * u.abs() < SERIES_CUTOFF {
        return riccati_series(u, xi) * d.density(xi);
    }
    if (0.5..=1.0).contains(&u) {
        // e^ξ (e^{−zξ} − 1 + z) − z with z = 1 − u, exact for u near 1
        let z = 1.0 - u;
        let a = libm::expm1(-z * xi) + z;
        return a * libm::exp(d.shifted(xi, 1.0)) - z * d.density(xi);
    }
    if xi < LOG_SPACE_CUTOFF {
        (libm::expm1(u * xi) - u * libm::expm1(xi)) * d.density(xi)
    } else {
        let rho = d.density(xi);
        libm::exp(d.shifted(xi, u)) - rho - u * (libm::exp(d.shifted(xi, 1.0)) - rho)
    }
}

// Σ_{n≥2} (uⁿ − u) ξⁿ / n!
fn riccati_series(u: f64, xi: f64) -> f64 {
    let near_one = u > 0.5 && u < 2.0;
    let ln_u = if near_one { libm::log1p(u - 1.0) } else { 0.0 };
    let mut sum = 0.0;
    let mut xi_pow = xi;
    let mut u_pow = u;
    let mut fact = 1.0;
    for n in 2..40 {
        xi_pow *= xi;
        u_pow *= u;
        fact *= n as f64;
        let coeff = if near_one {
            u * libm::expm1((n - 1) as f64 * ln_u)
        } else {
            u_pow - u
        };
        let term = coeff * xi_pow / fact;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && n > 3 {
            break;
        }
    }
    sum
}

/// `(e^{uξ} − 1 − uξ)·ρ(ξ)`.
pub fn compensated_exponential(u: f64, xi: f64, d: LnDensity) -> f64 {
    if d.vanishes() {
        return 0.0;
    }
    let x = u * xi;
    if x.abs() < SERIES_CUTOFF {
        let mut term = x;
        let mut sum = 0.0;
        for n in 2..30 {
            term *= x / n as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        return sum * d.density(xi);
    }
    if x < LOG_SPACE_CUTOFF {
        (libm::expm1(x) - x) * d.density(xi)
    } else {
        libm::exp(d.shifted(xi, u)) - (1.0 + x) * d.density(xi)
    }
}

/// `(e^{uξ} − 1)·ρ(ξ)`.
pub fn exponential_minus_one(u: f64, xi: f64, d: LnDensity) -> f64 {
    if d.vanishes() {
        return 0.0;
    }
    let x = u * xi;
    if x < LOG_SPACE_CUTOFF {
        libm::expm1(x) * d.density(xi)
    } else {
        libm::exp(d.shifted(xi, u)) - d.density(xi)
    }
}

/// `(1 − e^{−ξ})·ρ(ξ)`.
pub fn one_minus_decay(xi: f64, d: LnDensity) -> f64 {
    -libm::expm1(-xi) * d.density(xi)
}

/// `ξ·ρ(ξ)`.
pub fn first_power(xi: f64, d: LnDensity) -> f64 {
    xi * d.density(xi)
}

/// `ρ(ξ)`.
pub fn mass(xi: f64, d: LnDensity) -> f64 {
    d.density(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: LnDensity = LnDensity::new(0.0, 0.0);
    const DECAY: LnDensity = LnDensity::new(0.0, 1.0);

    fn direct(u: f64, xi: f64) -> f64 {
        libm::exp(u * xi) - 1.0 - u * (libm::exp(xi) - 1.0)
    }

    #[test]
    fn riccati_branches_agree_with_direct_formula() {
        for &u in &[-3.0, -1.0, -0.2, 0.3, 0.6, 0.9, 0.999] {
            for &xi in &[0.5, 1.0, 2.0, 5.0, 12.0] {
                let k = riccati(u, xi, FLAT);
                let d = direct(u, xi);
                assert!((k - d).abs() <= 1e-12 * d.abs().max(1e-3), "u={u} xi={xi} {k} {d}");
            }
        }
    }

    #[test]
    fn riccati_series_continuous_at_cutoff() {
        for &u in &[-0.9, 0.4, 0.75, 1.0 - 1e-7] {
            let below = riccati(u, SERIES_CUTOFF * (1.0 - 1e-12), FLAT);
            let above = riccati(u, SERIES_CUTOFF * (1.0 + 1e-12), FLAT);
            assert!((below - above).abs() <= 1e-10 * below.abs(), "u={u}: {below} {above}");
        }
    }

    #[test]
    fn riccati_vanishes_at_zero_and_one() {
        for &xi in &[1e-6, 0.05, 1.0, 50.0, 800.0] {
            assert_eq!(riccati(0.0, xi, DECAY), 0.0);
            assert_eq!(riccati(1.0, xi, DECAY), 0.0);
        }
    }

    #[test]
    fn riccati_leading_order_near_one() {
        // u = 1 − z: k(ξ) ≈ z((1−ξ)e^ξ − 1) for tiny z
        let z = 1e-9;
        let xi = 3.0;
        let k = riccati(1.0 - z, xi, FLAT);
        let lead = z * (libm::exp(xi) * (1.0 - xi) - 1.0);
        assert!((k - lead).abs() < 1e-6 * lead.abs(), "{k} {lead}");
    }

    #[test]
    fn huge_jumps_keep_the_tilted_exponent() {
        // ρ = ξ^{-1.1} e^{-ξ}: e^ξ ρ(ξ) at ξ = 1e30 is 1e-33, not 1
        let xi = 1e30;
        let d = LnDensity::new(-1.1 * libm::log(xi), 1.0);
        let k = riccati(0.9, xi, d);
        assert!(k.abs() < 1e-32 && k < 0.0, "{k}");
        assert!(riccati(-3.0, xi, d).abs() < 1e-32);
    }

    #[test]
    fn no_overflow_far_in_tail() {
        let xi = 2000.0;
        let ln_rho = LnDensity::new(0.0, 1.5);
        let v = riccati(0.9, xi, ln_rho);
        assert!(v.is_finite());
        assert!(compensated_exponential(1.0, xi, ln_rho).is_finite());
        assert!(exponential_minus_one(1.0, xi, ln_rho).is_finite());
    }
}
