//! Lévy measures on `(0, ∞)`, their moments and the Riccati function `R`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{domain, invalid, Error, Result};
use crate::quad::{self, Map, Piece, QuadOptions, QuadResult};
use crate::special;

mod generator;
pub mod kernels;

pub use generator::{harmonic_residual, htransform_generator_residual, TestFunction};
use kernels::{LnDensity, TailGrowth};

/// Description of a jump measure `μ(dξ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasureSpec {
    /// `μ(dξ) = c·e^{−βξ}·ξ^{−α} dξ`.
    TiltedPower { c: f64, alpha: f64, beta: f64 },
    /// Density sampled at strictly increasing nodes. Between nodes the log of
    /// the density is interpolated linearly (linear density if a node is zero);
    /// left of the first node the density follows `ξ^{−left_exponent}`, right of
    /// the last one it decays like `e^{−tilt_rate·ξ}`.
    Tabulated {
        points: Vec<(f64, f64)>,
        left_exponent: f64,
        tilt_rate: f64,
    },
}

impl LevyMeasureSpec {
    pub fn tilted_power(c: f64, alpha: f64, beta: f64) -> Self {
        LevyMeasureSpec::TiltedPower { c, alpha, beta }
    }

    /// `C(α)·e^{−ξ}·ξ^{−α}`: the family whose Riccati function is
    /// `(1−u) − (1−u)^{α−1}`.
    pub fn normalized(alpha: f64) -> Result<Self> {
        Ok(Self::tilted_power(special::gamma_constant(alpha)?, alpha, 1.0))
    }

    /// `e^{−ξ} ξ^{−3/2} / (2√π)`, with `b = 1/2` and `R(u) = (1−u) − √(1−u)`.
    pub fn tempered_stable_half() -> Self {
        Self::tilted_power(0.5 / libm::sqrt(PI), 1.5, 1.0)
    }

    /// Tabulates `density` at the given nodes.
    pub fn tabulate<F: Fn(f64) -> f64>(nodes: &[f64], density: F, left_exponent: f64, tilt_rate: f64) -> Self {
        LevyMeasureSpec::Tabulated {
            points: nodes.iter().map(|&x| (x, density(x))).collect(),
            left_exponent,
            tilt_rate,
        }
    }

    /// Checks field ranges and table shape. Does not require exponential moments.
    pub fn check_shape(&self) -> Result<()> {
        match self {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(invalid("c", "must be a positive finite number"));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid("alpha", "must lie in (0, 2)"));
                }
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(invalid("beta", "must be a finite number >= 0"));
                }
                if *beta == 0.0 && *alpha <= 1.0 {
                    return Err(invalid("alpha", "an untilted power measure needs alpha > 1"));
                }
            }
            LevyMeasureSpec::Tabulated {
                points,
                left_exponent,
                tilt_rate,
            } => {
                if points.len() < 2 {
                    return Err(invalid("points", "need at least two nodes"));
                }
                let mut prev = 0.0;
                for (i, &(x, d)) in points.iter().enumerate() {
                    if !(x.is_finite() && x > prev) {
                        return Err(invalid("points", format!("node {i} must be positive and strictly increasing")));
                    }
                    if !(d.is_finite() && d >= 0.0) {
                        return Err(invalid("points", format!("density at node {i} must be finite and >= 0")));
                    }
                    prev = x;
                }
                if points.iter().all(|&(_, d)| d == 0.0) {
                    return Err(invalid("points", "density is identically zero"));
                }
                if !(left_exponent.is_finite() && *left_exponent < 2.0) {
                    return Err(invalid("left_exponent", "must be finite and < 2"));
                }
                if !(tilt_rate.is_finite() && *tilt_rate >= 0.0) {
                    return Err(invalid("tilt_rate", "must be a finite number >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Whether `∫₁^∞ e^ξ μ(dξ) < ∞`.
    pub fn has_exponential_moment(&self) -> bool {
        match *self {
            LevyMeasureSpec::TiltedPower { alpha, beta, .. } => beta > 1.0 || (beta == 1.0 && alpha > 1.0),
            LevyMeasureSpec::Tabulated { tilt_rate, .. } => tilt_rate > 1.0,
        }
    }

    /// The measure `μ̃ = e^{ξ}·μ`, i.e. the tilt rate lowered by one.
    pub fn untilted(&self) -> Result<Self> {
        self.check_shape()?;
        match self {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                let beta = beta - 1.0;
                if beta < 0.0 || (beta == 0.0 && *alpha <= 1.0) {
                    return Err(domain("untilted measure has infinite tail mass"));
                }
                Ok(Self::tilted_power(*c, *alpha, beta))
            }
            LevyMeasureSpec::Tabulated {
                points,
                left_exponent,
                tilt_rate,
            } => {
                let tilt_rate = tilt_rate - 1.0;
                if tilt_rate <= 0.0 {
                    return Err(domain("untilted table would have a flat or growing tail"));
                }
                Ok(LevyMeasureSpec::Tabulated {
                    points: points.iter().map(|&(x, d)| (x, d * libm::exp(x))).collect(),
                    left_exponent: *left_exponent,
                    tilt_rate,
                })
            }
        }
    }

    /// Inverse of [`untilted`](Self::untilted): multiplies the density by `e^{−ξ}`.
    pub fn tilted(&self) -> Result<Self> {
        self.check_shape()?;
        Ok(match self {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => Self::tilted_power(*c, *alpha, beta + 1.0),
            LevyMeasureSpec::Tabulated {
                points,
                left_exponent,
                tilt_rate,
            } => LevyMeasureSpec::Tabulated {
                points: points.iter().map(|&(x, d)| (x, d * libm::exp(-x))).collect(),
                left_exponent: *left_exponent,
                tilt_rate: tilt_rate + 1.0,
            },
        })
    }
}

/// Derived scalars of a validated measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMoments {
    /// `∫ ξ μ(dξ)`.
    pub m1: f64,
    /// `∫ (e^ξ − 1 − ξ) μ(dξ)`.
    pub b: f64,
    /// `(ε, μ([ε, ∞)))` on [`MeasureMoments::EPS_GRID`].
    pub lambda_eps: Vec<(f64, f64)>,
    /// `(ε, ∫₀^ε ξ μ(dξ))` on the same grid.
    pub m_eps: Vec<(f64, f64)>,
}

impl MeasureMoments {
    pub const EPS_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
}

/// A shape-checked measure ready for integration and sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    spec: LevyMeasureSpec,
    // Tabulated only: nodes and log-densities.
    xs: Vec<f64>,
    ln_ds: Vec<f64>,
}

impl Measure {
    pub fn new(spec: LevyMeasureSpec) -> Result<Self> {
        spec.check_shape()?;
        let (xs, ln_ds) = match &spec {
            LevyMeasureSpec::TiltedPower { .. } => (Vec::new(), Vec::new()),
            LevyMeasureSpec::Tabulated { points, .. } => (
                points.iter().map(|p| p.0).collect(),
                points.iter().map(|p| libm::log(p.1)).collect(),
            ),
        };
        Ok(Self { spec, xs, ln_ds })
    }

    pub fn spec(&self) -> &LevyMeasureSpec {
        &self.spec
    }

    /// `ln ρ(ξ)` for `ξ > 0`; `−∞` where the density vanishes.
    pub fn ln_density(&self, xi: f64) -> f64 {
        self.ln_density_parts(xi).at(xi)
    }

    /// `ln ρ(ξ)` split into `base − tilt·ξ`, with the tail tilt kept separate.
    pub fn ln_density_parts(&self, xi: f64) -> LnDensity {
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => LnDensity::new(libm::log(c) - alpha * libm::log(xi), beta),
            LevyMeasureSpec::Tabulated {
                left_exponent,
                tilt_rate,
                ..
            } => {
                let n = self.xs.len();
                if xi <= self.xs[0] {
                    return LnDensity::new(self.ln_ds[0] - left_exponent * libm::log(xi / self.xs[0]), 0.0);
                }
                if xi >= self.xs[n - 1] {
                    return LnDensity::new(self.ln_ds[n - 1] + tilt_rate * self.xs[n - 1], tilt_rate);
                }
                let i = self.xs.partition_point(|&x| x <= xi) - 1;
                let (x0, x1) = (self.xs[i], self.xs[i + 1]);
                let (l0, l1) = (self.ln_ds[i], self.ln_ds[i + 1]);
                let w = (xi - x0) / (x1 - x0);
                let base = if l0.is_finite() && l1.is_finite() {
                    l0 + w * (l1 - l0)
                } else {
                    libm::log((1.0 - w) * libm::exp(l0) + w * libm::exp(l1))
                };
                LnDensity::new(base, 0.0)
            }
        }
    }

    pub fn density(&self, xi: f64) -> f64 {
        libm::exp(self.ln_density(xi))
    }

    /// Exponent `p` of the `ξ^{−p}` behaviour at the origin.
    pub fn left_exponent(&self) -> f64 {
        match self.spec {
            LevyMeasureSpec::TiltedPower { alpha, .. } => alpha,
            LevyMeasureSpec::Tabulated { left_exponent, .. } => left_exponent,
        }
    }

    /// Exponential decay rate of the right tail.
    pub fn tilt_rate(&self) -> f64 {
        match self.spec {
            LevyMeasureSpec::TiltedPower { beta, .. } => beta,
            LevyMeasureSpec::Tabulated { tilt_rate, .. } => tilt_rate,
        }
    }

    pub(crate) fn table_nodes(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn table_ln_densities(&self) -> &[f64] {
        &self.ln_ds
    }

    /// `∫_lo^hi w(ξ, ln ρ(ξ)) dξ` where `w` is a kernel weight from
    /// [`kernels`]; `growth` bounds the kernel at infinity and selects the tail
    /// map, `breaks` are extra points where `w` is not smooth.
    pub fn integrate<W: Fn(f64, LnDensity) -> f64>(
        &self,
        weight: W,
        growth: TailGrowth,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        opts: QuadOptions,
    ) -> Result<QuadResult> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(domain("integration range must satisfy 0 <= lo < hi"));
        }
        let mut knots: Vec<f64> = Vec::new();
        match self.spec {
            LevyMeasureSpec::TiltedPower { .. } => knots.push(1.0),
            LevyMeasureSpec::Tabulated { .. } => knots.extend_from_slice(&self.xs),
        }
        knots.extend_from_slice(breaks);
        knots.retain(|&k| k > lo && k < hi && k.is_finite());
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut pieces = Vec::with_capacity(knots.len() + 2);
        let mut a = lo;
        for &k in knots.iter().chain(core::iter::once(&hi)) {
            if k.is_finite() {
                pieces.push(self.finite_piece(a, k));
                a = k;
            } else {
                pieces.push(self.tail_piece(a, growth)?);
            }
        }
        quad::integrate_pieces(
            |xi| if xi > 0.0 { weight(xi, self.ln_density_parts(xi)) } else { 0.0 },
            &pieces,
            opts,
        )
    }

    fn finite_piece(&self, a: f64, b: f64) -> Piece {
        if a == 0.0 {
            let p = self.left_exponent();
            let k = if p < 1.0 { 1.0 } else { 1.0 / (2.0 - p) };
            return Piece::unit(Map::PowerLeft { scale: b, k });
        }
        if b / a > 8.0 {
            Piece::unit(Map::Log {
                lo: a,
                log_ratio: libm::log(b / a),
            })
        } else {
            Piece::identity(a, b)
        }
    }

    fn tail_piece(&self, start: f64, growth: TailGrowth) -> Result<Piece> {
        let rate = self.tilt_rate() - growth.exp_rate;
        match self.spec {
            LevyMeasureSpec::TiltedPower { alpha, .. } => {
                let decay = alpha - growth.power;
                if rate < 0.0 || (rate == 0.0 && decay <= 1.0) {
                    return Err(Error::NonIntegrableTail(format!(
                        "kernel grows like ξ^{}·e^{}ξ against tilt {}",
                        growth.power,
                        growth.exp_rate,
                        self.tilt_rate()
                    )));
                }
                let q = if decay > 1.0 { 1.0 / (decay - 1.0) } else { 1.0 };
                Ok(Piece::unit(Map::PowerTail { start, q: q.min(50.0) }))
            }
            LevyMeasureSpec::Tabulated { .. } => {
                if rate <= 0.0 {
                    return Err(Error::NonIntegrableTail(format!(
                        "table tail e^(-{}ξ) does not dominate kernel growth e^({}ξ)",
                        self.tilt_rate(),
                        growth.exp_rate
                    )));
                }
                Ok(Piece::unit(Map::ExpTail { start, rate }))
            }
        }
    }

    /// `μ([ε, ∞))`.
    pub fn tail_intensity(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                if beta == 0.0 {
                    Ok(c * libm::pow(eps, 1.0 - alpha) / (alpha - 1.0))
                } else {
                    let g = special::upper_gamma(1.0 - alpha, beta * eps)?;
                    Ok(c * libm::pow(beta, alpha - 1.0) * g)
                }
            }
            LevyMeasureSpec::Tabulated { .. } => Ok(self
                .integrate(kernels::mass, TailGrowth::BOUNDED, eps, f64::INFINITY, &[], QuadOptions::default())?
                .value),
        }
    }

    /// `∫₀^ε ξ μ(dξ)`.
    pub fn small_jump_mean(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                if beta == 0.0 {
                    Ok(c * libm::pow(eps, 2.0 - alpha) / (2.0 - alpha))
                } else {
                    let g = special::lower_gamma(2.0 - alpha, beta * eps)?;
                    Ok(c * libm::pow(beta, alpha - 2.0) * g)
                }
            }
            LevyMeasureSpec::Tabulated { .. } => Ok(self
                .integrate(kernels::first_power, TailGrowth::LINEAR, 0.0, eps, &[], QuadOptions::default())?
                .value),
        }
    }

    /// `∫_ε^∞ ξ μ(dξ)`.
    pub fn tail_mean(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                if beta == 0.0 {
                    return Err(Error::NonIntegrableTail("power tail has no first moment".into()));
                }
                let g = special::upper_gamma(2.0 - alpha, beta * eps)?;
                Ok(c * libm::pow(beta, alpha - 2.0) * g)
            }
            LevyMeasureSpec::Tabulated { .. } => Ok(self
                .integrate(kernels::first_power, TailGrowth::LINEAR, eps, f64::INFINITY, &[], QuadOptions::default())?
                .value),
        }
    }

    /// `∫ ξ μ(dξ)`.
    pub fn first_moment(&self) -> Result<f64> {
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                if beta == 0.0 {
                    return Err(Error::NonIntegrableTail("power tail has no first moment".into()));
                }
                Ok(c * libm::pow(beta, alpha - 2.0) * special::gamma(2.0 - alpha))
            }
            LevyMeasureSpec::Tabulated { .. } => Ok(self
                .integrate(kernels::first_power, TailGrowth::LINEAR, 0.0, f64::INFINITY, &[], QuadOptions::default())?
                .value),
        }
    }

    /// `∫ (1 − e^{−ξ}) μ(dξ)`: the linear drift under which `e^{−x}` is
    /// harmonic for the uncompensated process driven by this measure.
    pub fn harmonic_drift(&self) -> Result<f64> {
        Ok(self
            .integrate(
                kernels::one_minus_decay,
                TailGrowth::BOUNDED,
                0.0,
                f64::INFINITY,
                &[],
                QuadOptions::default(),
            )?
            .value)
    }

    fn require_exponential_moment(&self) -> Result<()> {
        if self.spec.has_exponential_moment() {
            Ok(())
        } else {
            Err(Error::NonIntegrableTail(match self.spec {
                LevyMeasureSpec::TiltedPower { .. } => "∫₁^∞ e^ξ μ(dξ) diverges: need beta > 1, or beta = 1 with alpha > 1".into(),
                LevyMeasureSpec::Tabulated { .. } => "∫₁^∞ e^ξ μ(dξ) diverges: tabulated tail needs tilt_rate > 1".into(),
            }))
        }
    }

    /// Whether `R` has the closed form `(c/C(α))·((1−u) − (1−u)^{α−1})`.
    fn closed_form_scale(&self) -> Option<(f64, f64)> {
        match self.spec {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } if beta == 1.0 && alpha > 1.0 && alpha < 2.0 => {
                special::gamma_constant(alpha).ok().map(|norm| (c / norm, alpha))
            }
            _ => None,
        }
    }

    /// Checks the conservative-process requirements and computes the moments.
    pub fn validate(&self) -> Result<MeasureMoments> {
        self.require_exponential_moment()?;
        let (m1, b) = match self.closed_form_scale() {
            Some((scale, alpha)) => (scale * (alpha - 1.0), scale * (2.0 - alpha)),
            None => {
                let m1 = self.first_moment()?;
                let b = self
                    .integrate(
                        |xi, l| kernels::compensated_exponential(1.0, xi, l),
                        TailGrowth::EXPONENTIAL,
                        0.0,
                        f64::INFINITY,
                        &[],
                        QuadOptions::default(),
                    )?
                    .value;
                (m1, b)
            }
        };
        if !(m1 > 0.0 && b > 0.0) {
            return Err(invalid("measure", "moments m1 and b must be positive"));
        }
        let mut lambda_eps = Vec::with_capacity(MeasureMoments::EPS_GRID.len());
        let mut m_eps = Vec::with_capacity(MeasureMoments::EPS_GRID.len());
        for &eps in &MeasureMoments::EPS_GRID {
            lambda_eps.push((eps, self.tail_intensity(eps)?));
            m_eps.push((eps, self.small_jump_mean(eps)?));
        }
        Ok(MeasureMoments {
            m1,
            b,
            lambda_eps,
            m_eps,
        })
    }

    /// `R(u)`, closed form when available, quadrature otherwise.
    pub fn r_function(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        self.require_exponential_moment()?;
        match self.closed_form_scale() {
            Some((scale, alpha)) if u < 0.5 => Ok(scale * (-u - libm::expm1((alpha - 1.0) * libm::log1p(-u)))),
            Some((scale, alpha)) => {
                let z = 1.0 - u;
                Ok(scale * (z - libm::pow(z, alpha - 1.0)))
            }
            None => self.r_quadrature(u),
        }
    }

    /// `R(1 − z)` for `z ≥ 0`, keeping full relative precision in `z` when the
    /// closed form applies.
    pub fn r_one_minus(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain(format!("R(1 - z) needs z >= 0 (got {z})")));
        }
        self.require_exponential_moment()?;
        match self.closed_form_scale() {
            Some(_) if z > 0.5 => self.r_function(1.0 - z),
            Some((scale, alpha)) => Ok(scale * (z - libm::pow(z, alpha - 1.0))),
            None => self.r_quadrature(1.0 - z),
        }
    }

    /// `R(u) = ∫ (e^{uξ} − 1 − u(e^ξ − 1)) μ(dξ)` by quadrature, whatever the spec.
    pub fn r_function_quadrature(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        self.require_exponential_moment()?;
        self.r_quadrature(u)
    }

    fn r_quadrature(&self, u: f64) -> Result<f64> {
        if u == 0.0 || u == 1.0 {
            return Ok(0.0);
        }
        let opts = QuadOptions::default().with_abs_tol(1e-17);
        Ok(self
            .integrate(
                |xi, l| kernels::riccati(u, xi, l),
                TailGrowth::EXPONENTIAL,
                0.0,
                f64::INFINITY,
                &[],
                opts,
            )?
            .value)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(domain("truncation level must be positive and finite"))
    }
}

fn check_u(u: f64) -> Result<()> {
    if u <= 1.0 && u.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("R(u) is only defined for u <= 1 (got {u})")))
    }
}

/// Validates `spec` as the jump measure of a conservative process.
pub fn validate(spec: &LevyMeasureSpec) -> Result<MeasureMoments> {
    Measure::new(spec.clone())?.validate()
}

/// `R(u)` for `spec`.
pub fn r_function(spec: &LevyMeasureSpec, u: f64) -> Result<f64> {
    Measure::new(spec.clone())?.r_function(u)
}

/// `C(α) = sin((α−1)π)·Γ(α)/π`.
pub fn gamma_constant(alpha: f64) -> Result<f64> {
    special::gamma_constant(alpha)
}

/// `|C(α)·∫(e^{uξ} − 1) e^{−ξ} ξ^{−α} dξ − (1 − (1−u)^{α−1})|`, the integral by quadrature.
pub fn gamma_identity_residual(alpha: f64, u: f64) -> Result<f64> {
    let norm = special::gamma_constant(alpha)?;
    check_u(u)?;
    let unit = Measure::new(LevyMeasureSpec::tilted_power(1.0, alpha, 1.0))?;
    let growth = TailGrowth {
        exp_rate: u.max(0.0),
        power: 0.0,
    };
    let integral = unit
        .integrate(
            |xi, l| kernels::exponential_minus_one(u, xi, l),
            growth,
            0.0,
            f64::INFINITY,
            &[],
            QuadOptions::default().with_rel_tol(1e-13),
        )?
        .value;
    Ok((norm * integral - (1.0 - libm::pow(1.0 - u, alpha - 1.0))).abs())
}

/// `|C(α)·∫ e^{−ξ} ξ^{1−α} dξ − (α − 1)|`, the integral by quadrature.
pub fn gamma_first_moment_residual(alpha: f64) -> Result<f64> {
    let norm = special::gamma_constant(alpha)?;
    let unit = Measure::new(LevyMeasureSpec::tilted_power(1.0, alpha, 1.0))?;
    let integral = unit
        .integrate(
            kernels::first_power,
            TailGrowth::LINEAR,
            0.0,
            f64::INFINITY,
            &[],
            QuadOptions::default().with_rel_tol(1e-13),
        )?
        .value;
    Ok((norm * integral - (alpha - 1.0)).abs())
}
