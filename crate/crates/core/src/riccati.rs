//! The Riccati equation `ġ = R(g)`, its minimal solution through `u = 1`, and
//! the strict/true martingale classifier.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::measure::{LevyMeasureSpec, Measure, MeasureMoments};
use crate::quad::{self, Map, Piece, QuadOptions};

/// Outcome of the Osgood test at `u = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `1/R` is integrable below 1: `e^X − 1` is a strict local martingale.
    Strict,
    /// `1/R` is not integrable: `e^X − 1` is a true martingale.
    TrueMartingale,
    /// The exponent fit falls inside the margin around 1.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Strict => "Strict",
            Verdict::TrueMartingale => "TrueMartingale",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    /// `∫_{1/2}^1 dη / (−R(η))`, infinite unless the verdict is `Strict`.
    pub osgood_value: f64,
    /// `p` in `−R(1 − z) ≍ z^p` as `z → 0`.
    pub exponent_estimate: f64,
    pub exponent_stderr: f64,
}

/// Default half-width of the band around exponent 1 reported as inconclusive.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Abscissae of the exponent fit: `z = 10^{−2}, 10^{−2.5}, …, 10^{−6}`.
pub fn fit_grid() -> [f64; 9] {
    core::array::from_fn(|i| libm::pow(10.0, -2.0 - 0.5 * i as f64))
}

/// Numerical solution of `ġ = R(g)`, `g(0) = u0`, with dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub u0: f64,
    /// Accepted step endpoints, starting at 0 and ending at `t_end`.
    pub t_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    /// `max |ġ − R(g)|` of the interpolant at step midpoints.
    pub max_residual: f64,
    pub steps_taken: usize,
    dense: Vec<[f64; 5]>,
}

impl RiccatiSolution {
    pub fn t_end(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    pub fn final_value(&self) -> f64 {
        *self.g_values.last().unwrap()
    }

    /// `g(t)` from the dense interpolant; `t` is clamped to `[0, t_end]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_end());
        if self.dense.is_empty() {
            return self.u0;
        }
        let i = self.t_grid.partition_point(|&s| s <= t).clamp(1, self.dense.len()) - 1;
        let h = self.t_grid[i + 1] - self.t_grid[i];
        let theta = if h > 0.0 { (t - self.t_grid[i]) / h } else { 0.0 };
        dense_value(&self.dense[i], theta)
    }
}

fn dense_value(rc: &[f64; 5], theta: f64) -> f64 {
    let s = 1.0 - theta;
    rc[0] + theta * (rc[1] + s * (rc[2] + theta * (rc[3] + s * rc[4])))
}

// d/dθ of `dense_value`.
fn dense_slope(rc: &[f64; 5], theta: f64) -> f64 {
    let s = 1.0 - theta;
    let c = rc[3] + s * rc[4];
    let b = rc[2] + theta * c;
    let a = rc[1] + s * b;
    let db = c - theta * rc[4];
    let da = -b + s * db;
    a + theta * da
}

// Dormand–Prince 5(4) tableau with the Hairer dense-output weights.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Default relative tolerance of [`Riccati::solve`]; the absolute tolerance is
/// a hundredth of it.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_STEPS: usize = 1_000_000;

/// Integrates `ġ = r(g)` from `u0` over `[0, t_end]`.
fn dopri5<F: Fn(f64) -> Result<f64>>(r: F, u0: f64, t_end: f64, tol: f64) -> Result<RiccatiSolution> {
    let rtol = tol;
    let atol = tol / 100.0;
    let mut t = 0.0;
    let mut y = u0;
    let mut k1 = r(y)?;
    let mut t_grid = alloc::vec![0.0];
    let mut g_values = alloc::vec![u0];
    let mut dense = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut h = initial_step(k1, y, t_end, rtol, atol);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= MAX_STEPS {
            return Err(Error::StepSizeUnderflow { t });
        }
        if h < 1e-15 * t.max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let stages = (|| -> Result<_> {
            let k2 = r(y + h * A21 * k1)?;
            let k3 = r(y + h * (A31 * k1 + A32 * k2))?;
            let k4 = r(y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
            let k5 = r(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
            let k6 = r(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
            let y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
            let k7 = r(y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(s) => s,
            // A stage left the domain of R (u > 1): shrink and retry.
            Err(Error::Domain(_)) => {
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let err_abs = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = atol + rtol * y.abs().max(y1.abs());
        let err = (err_abs / scale).abs();
        if err <= 1.0 && y1.is_finite() {
            let rc2 = y1 - y;
            let rc3 = h * k1 - rc2;
            let rc4 = rc2 - h * k7 - rc3;
            let rc5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
            let rc = [y, rc2, rc3, rc4, rc5];
            let mid = dense_value(&rc, 0.5);
            if let Ok(r_mid) = r(mid) {
                max_residual = max_residual.max((dense_slope(&rc, 0.5) / h - r_mid).abs());
            }
            dense.push(rc);
            t = if last { t_end } else { t + h };
            y = y1;
            k1 = k7;
            t_grid.push(t);
            g_values.push(y);
            steps += 1;
        }
        let fac = if err == 0.0 { 10.0 } else { 0.9 * libm::pow(err, -0.2) };
        let fac = if err <= 1.0 { fac.clamp(0.2, 10.0) } else { fac.clamp(0.2, 1.0) };
        h *= fac;
        if !h.is_finite() {
            h = t_end;
        }
    }
    Ok(RiccatiSolution {
        u0,
        t_grid,
        g_values,
        max_residual,
        steps_taken: steps,
        dense,
    })
}

fn initial_step(f0: f64, y0: f64, t_end: f64, rtol: f64, atol: f64) -> f64 {
    let scale = atol + rtol * y0.abs();
    let h = if f0 == 0.0 {
        t_end
    } else {
        0.01 * libm::pow(scale / f0.abs(), 0.2)
    };
    h.clamp(1e-12, t_end.max(1e-12))
}

/// Cached measure, moments and classification for one spec.
#[derive(Debug, Clone)]
pub struct Riccati {
    measure: Measure,
    moments: MeasureMoments,
    classification: Classification,
}

impl Riccati {
    /// Validates `spec` and classifies it with [`DEFAULT_MARGIN`].
    pub fn new(spec: &LevyMeasureSpec) -> Result<Self> {
        Self::with_margin(spec, DEFAULT_MARGIN)
    }

    pub fn with_margin(spec: &LevyMeasureSpec, margin: f64) -> Result<Self> {
        let measure = Measure::new(spec.clone())?;
        let moments = measure.validate()?;
        let classification = classify_measure(&measure, margin)?;
        Ok(Self {
            measure,
            moments,
            classification,
        })
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn moments(&self) -> &MeasureMoments {
        &self.moments
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn r(&self, u: f64) -> Result<f64> {
        self.measure.r_function(u)
    }

    /// Solves `ġ = R(g)`, `g(0) = u0 < 1`, on `[0, t_end]`.
    pub fn solve(&self, u0: f64, t_end: f64, tol: f64) -> Result<RiccatiSolution> {
        if !(u0 < 1.0) {
            return Err(domain(format!("initial value must be < 1 (got {u0})")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(crate::error::invalid("t_end", "must be finite and >= 0"));
        }
        if !(tol > 0.0) {
            return Err(crate::error::invalid("tol", "must be positive"));
        }
        if t_end == 0.0 {
            return Ok(RiccatiSolution {
                u0,
                t_grid: alloc::vec![0.0],
                g_values: alloc::vec![u0],
                max_residual: 0.0,
                steps_taken: 0,
                dense: Vec::new(),
            });
        }
        dopri5(|g| self.measure.r_function(g), u0, t_end, tol)
    }

    fn require_strict(&self) -> Result<()> {
        match self.classification.verdict {
            Verdict::Strict => Ok(()),
            Verdict::TrueMartingale => Err(Error::DivergentIntegral(
                "1/R is not integrable at 1 for a true martingale".into(),
            )),
            Verdict::Inconclusive => Err(Error::Inconclusive {
                exponent: self.classification.exponent_estimate,
            }),
        }
    }

    /// `T(x) = ∫_x^1 dη / (−R(η))` for `x ∈ (0, 1]`.
    pub fn time_map(&self, x: f64) -> Result<f64> {
        self.require_strict()?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(domain(format!("time map needs x in (0, 1] (got {x})")));
        }
        osgood(&self.measure, 1.0 - x, x, self.classification.exponent_estimate)
    }

    /// `g₋(t, 1)`, the non-constant solution leaving 1, by inverting the time map.
    pub fn minimal_solution(&self, t: f64) -> Result<f64> {
        self.require_strict()?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(domain("time must be finite and >= 0"));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let p = self.classification.exponent_estimate;
        // Bisection on y = logit(1 − x), which resolves both ends relatively.
        let z_of = |y: f64| 1.0 / (1.0 + libm::exp(-y));
        let x_of = |y: f64| 1.0 / (1.0 + libm::exp(y));
        let time = |y: f64| osgood(&self.measure, z_of(y), x_of(y), p);
        let (mut lo, mut hi) = (-40.0, 40.0);
        if time(lo)? >= t {
            return Ok(x_of(lo));
        }
        if time(hi)? <= t {
            return Ok(x_of(hi));
        }
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if time(mid)? < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(x_of(0.5 * (lo + hi)))
    }

    /// `g₋(t, 1)` for strict specs, 1 for true martingales.
    pub fn g_minus(&self, t: f64) -> Result<f64> {
        match self.classification.verdict {
            Verdict::TrueMartingale => Ok(1.0),
            _ => self.minimal_solution(t),
        }
    }

    /// `E[e^{u X_t}] = exp(x0·g(t, u))` for `X_0 = x0`.
    pub fn expected_value(&self, x0: f64, t: f64, u: f64) -> Result<f64> {
        if u > 1.0 {
            return Err(domain(format!("exponential moments exist only for u <= 1 (got {u})")));
        }
        if u == 0.0 {
            return Ok(1.0);
        }
        let g = if u == 1.0 {
            self.g_minus(t)?
        } else {
            self.solve(u, t, DEFAULT_TOL)?.final_value()
        };
        Ok(libm::exp(x0 * g))
    }

    /// `e^{x0} − E[e^{X_t}]`, zero for true martingales.
    pub fn martingale_defect(&self, x0: f64, t: f64) -> Result<f64> {
        let g = self.g_minus(t)?;
        if g == 1.0 {
            return Ok(0.0);
        }
        Ok(libm::exp(x0) * -libm::expm1(x0 * (g - 1.0)))
    }
}

/// `∫_0^z dζ / f(ζ)` with `f(ζ) = −R(1 − ζ)` and `x = 1 − z` passed separately
/// so that both ends keep their relative precision. The piece below `z = 1/2`
/// uses `ζ = w^k`, `k = 1/(1 − p)`, which flattens the `ζ^{−p}` singularity;
/// the piece above integrates `η = 1 − ζ` on a log scale down to `x`.
fn osgood(measure: &Measure, z: f64, x: f64, p: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions::default().with_rel_tol(1e-13).with_abs_tol(1e-300);
    let k = 1.0 / (1.0 - p.clamp(0.0, 0.97));
    let z_low = z.min(0.5);
    let w_max = libm::pow(z_low, 1.0 / k);
    let inner = |w: f64| {
        let zeta = libm::pow(w, k);
        if zeta == 0.0 {
            return 0.0;
        }
        match measure.r_one_minus(zeta) {
            Ok(r) if r < 0.0 => k * libm::pow(w, k - 1.0) / -r,
            _ => f64::NAN,
        }
    };
    let low = quad::integrate(inner, 0.0, w_max, opts)?.value;
    if !low.is_finite() {
        return Err(Error::DivergentIntegral("R vanishes inside (0, 1)".into()));
    }
    if z <= 0.5 {
        return Ok(low);
    }
    let eta_lo = x;
    if eta_lo <= 0.0 {
        return Err(Error::DivergentIntegral("1/R is not integrable at 0".into()));
    }
    let outer = |eta: f64| match measure.r_function(eta) {
        Ok(r) if r < 0.0 => 1.0 / -r,
        _ => f64::NAN,
    };
    let piece = Piece::unit(Map::Log {
        lo: eta_lo,
        log_ratio: libm::log(0.5 / eta_lo),
    });
    let high = quad::integrate_pieces(outer, &[piece], opts)?.value;
    if !high.is_finite() {
        return Err(Error::DivergentIntegral("R vanishes inside (0, 1)".into()));
    }
    Ok(low + high)
}

/// Least-squares slope of `ys` on `xs` with its standard error.
fn regression_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - my - slope * (x - mx);
            e * e
        })
        .sum();
    let stderr = if xs.len() > 2 {
        libm::sqrt(sse / (n - 2.0) / sxx)
    } else {
        0.0
    };
    (slope, stderr)
}

/// Classifies `spec` by the behaviour of `R` at `1⁻`.
pub fn classify(spec: &LevyMeasureSpec, margin: f64) -> Result<Classification> {
    let measure = Measure::new(spec.clone())?;
    measure.validate()?;
    classify_measure(&measure, margin)
}

/// The exponent `p` of `f(z) = −R(1 − z) ≍ z^p` is read off the second
/// difference `f(2z) − 2f(z)`, which cancels any term linear in `z` and so
/// separates `p < 1` from the smooth case, where it behaves like `z²`.
fn classify_measure(measure: &Measure, margin: f64) -> Result<Classification> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(crate::error::invalid("margin", "must lie in (0, 0.5)"));
    }
    let grid = fit_grid();
    let mut ln_z = Vec::with_capacity(grid.len());
    let mut ln_d = Vec::with_capacity(grid.len());
    let mut ln_f = Vec::with_capacity(grid.len());
    for &z in &grid {
        let f1 = -measure.r_one_minus(z)?;
        let f2 = -measure.r_one_minus(2.0 * z)?;
        let d = (f2 - 2.0 * f1).abs();
        if !(f1 > 0.0) {
            return Err(Error::Domain(format!("R(1 - {z}) is not negative")));
        }
        ln_z.push(libm::log(z));
        ln_f.push(libm::log(f1));
        ln_d.push(libm::log(d.max(f64::MIN_POSITIVE)));
    }
    let (q, q_err) = regression_slope(&ln_z, &ln_d);
    let inconclusive = |p: f64, err: f64| Classification {
        verdict: Verdict::Inconclusive,
        osgood_value: f64::INFINITY,
        exponent_estimate: p,
        exponent_stderr: err,
    };
    if q < 1.0 - margin {
        return Ok(match osgood(measure, 0.5, 0.5, q) {
            Ok(v) if v.is_finite() => Classification {
                verdict: Verdict::Strict,
                osgood_value: v,
                exponent_estimate: q,
                exponent_stderr: q_err,
            },
            _ => inconclusive(q, q_err),
        });
    }
    if q > 1.0 + margin {
        let (p, p_err) = regression_slope(&ln_z, &ln_f);
        return Ok(Classification {
            verdict: Verdict::TrueMartingale,
            osgood_value: f64::INFINITY,
            exponent_estimate: p,
            exponent_stderr: p_err,
        });
    }
    Ok(inconclusive(q, q_err))
}
