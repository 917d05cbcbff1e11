//! Generator identities: harmonicity of `e^{−x}` for the untilted measure and
//! the h-transform relation between the two generators.

use alloc::vec::Vec;

use super::kernels::{LnDensity, TailGrowth};
use super::{LevyMeasureSpec, Measure};
use crate::error::{invalid, Result};
use crate::quad::QuadOptions;

/// Smooth compactly supported test functions for the generator checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Zero,
    /// `exp(−1/(1−z²))` with `z = (y − center)/radius`, zero for `|z| ≥ 1`.
    Bump { center: f64, radius: f64 },
    /// Sum of two bumps, the second scaled by `weight`.
    BumpPair {
        first: (f64, f64),
        second: (f64, f64),
        weight: f64,
    },
}

impl TestFunction {
    /// The fixed catalogue, keyed by id.
    pub fn catalogue() -> [(&'static str, TestFunction); 4] {
        [
            ("zero", TestFunction::Zero),
            (
                "bump",
                TestFunction::Bump {
                    center: 1.0,
                    radius: 0.5,
                },
            ),
            (
                "wide_bump",
                TestFunction::Bump {
                    center: 1.5,
                    radius: 1.2,
                },
            ),
            (
                "bump_pair",
                TestFunction::BumpPair {
                    first: (0.8, 0.4),
                    second: (2.0, 0.7),
                    weight: -0.5,
                },
            ),
        ]
    }

    pub fn by_id(id: &str) -> Result<TestFunction> {
        Self::catalogue()
            .iter()
            .find(|(name, _)| *name == id)
            .map(|&(_, f)| f)
            .ok_or_else(|| invalid("test_function", alloc::format!("unknown id {id:?}")))
    }

    /// `(f, f′, f″)` at `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        match *self {
            TestFunction::Zero => (0.0, 0.0, 0.0),
            TestFunction::Bump { center, radius } => bump(y, center, radius),
            TestFunction::BumpPair { first, second, weight } => {
                let a = bump(y, first.0, first.1);
                let b = bump(y, second.0, second.1);
                (a.0 + weight * b.0, a.1 + weight * b.1, a.2 + weight * b.2)
            }
        }
    }

    /// Support edges, where the function is smooth but flat to all orders.
    pub fn edges(&self) -> Vec<f64> {
        match *self {
            TestFunction::Zero => Vec::new(),
            TestFunction::Bump { center, radius } => alloc::vec![center - radius, center + radius],
            TestFunction::BumpPair { first, second, .. } => alloc::vec![
                first.0 - first.1,
                first.0 + first.1,
                second.0 - second.1,
                second.0 + second.1,
            ],
        }
    }
}

fn bump(y: f64, center: f64, radius: f64) -> (f64, f64, f64) {
    let z = (y - center) / radius;
    let q = 1.0 - z * z;
    if q <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let phi = libm::exp(-1.0 / q);
    let d1 = -2.0 * z * phi / (q * q);
    let d2 = phi * (4.0 * z * z / (q * q * q * q) - (2.0 + 6.0 * z * z) / (q * q * q));
    (phi, d1 / radius, d2 / (radius * radius))
}

const TAYLOR_CUTOFF: f64 = 1e-4;

/// `|∫(1 − e^{−ξ}) μ̃(dξ) − 1|`: zero exactly when `e^{−x}` is harmonic for
/// `−x f′ + x∫(f(x+ξ) − f(x)) μ̃(dξ)`.
pub fn harmonic_residual(untilted: &LevyMeasureSpec) -> Result<f64> {
    Ok((Measure::new(untilted.clone())?.harmonic_drift()? - 1.0).abs())
}

/// Absolute difference between the two sides of the h-transform identity at
/// `x` for the conservative measure `spec`:
///
/// `e^{x}·Ã(f·e^{−·})(x) = −b x f′(x) + x∫(f(x+ξ) − f(x) − f′(x)ξ) μ(dξ)`,
///
/// where `Ã g = −d x g′ + x∫(g(x+ξ) − g(x)) μ̃(dξ)`, `μ̃ = e^{ξ}μ` and
/// `d = ∫(1 − e^{−ξ}) μ̃(dξ)` (equal to 1 for the standard measure). The two
/// sides are evaluated by separate quadratures against `μ̃` and `μ`.
pub fn htransform_generator_residual(spec: &LevyMeasureSpec, x: f64, f: &TestFunction) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid("x", "must be positive and finite"));
    }
    if *f == TestFunction::Zero {
        return Ok(0.0);
    }
    let mu = Measure::new(spec.clone())?;
    let b = mu.validate()?.b;
    let dual = Measure::new(spec.untilted()?)?;
    let d = dual.harmonic_drift()?;

    let (f0, f1, f2) = f.eval(x);
    let breaks: Vec<f64> = f.edges().into_iter().map(|e| e - x).filter(|&e| e > 0.0).collect();
    let opts = QuadOptions::default().with_abs_tol(1e-14);

    let tilted_jump = |xi: f64, d: LnDensity| {
        let k = if xi < TAYLOR_CUTOFF {
            (f1 - f0) * xi + (f2 - 2.0 * f1 + f0) * xi * xi / 2.0
        } else {
            f.eval(x + xi).0 * libm::exp(-xi) - f0
        };
        k * d.density(xi)
    };
    let lhs_jump = dual.integrate(tilted_jump, TailGrowth::BOUNDED, 0.0, f64::INFINITY, &breaks, opts)?.value;
    let lhs = -d * x * (f1 - f0) + x * lhs_jump;

    let compensated_jump = |xi: f64, d: LnDensity| {
        let k = if xi < TAYLOR_CUTOFF {
            f2 * xi * xi / 2.0
        } else {
            f.eval(x + xi).0 - f0 - f1 * xi
        };
        k * d.density(xi)
    };
    let rhs_jump = mu.integrate(compensated_jump, TailGrowth::LINEAR, 0.0, f64::INFINITY, &breaks, opts)?.value;
    let rhs = -b * x * f1 + x * rhs_jump;

    Ok((lhs - rhs).abs())
}
