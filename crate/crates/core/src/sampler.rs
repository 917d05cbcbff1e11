//! Exact draws from the normalised restriction `μ|[ε,∞) / Λ(ε)`.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::measure::{LevyMeasureSpec, Measure};
use crate::rng::{open_unit, standard_exponential, Rng};

/// Below this analytic acceptance rate the rejection samplers give way to a
/// piecewise table.
pub const MIN_ACCEPTANCE: f64 = 0.01;

/// Jumps larger than `ε` for one measure and one truncation level.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    eps: f64,
    lambda: f64,
    acceptance: f64,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    /// `Λ(ε)` is zero to double precision.
    Empty,
    /// `ξ = ε·U^{−1/(α−1)}`, accepted with probability `e^{−β(ξ−ε)}`.
    Pareto { exponent: f64, beta: f64 },
    /// `ξ = ε + Exp(β)`, accepted with probability `(ξ/ε)^{−α}`.
    Shifted { alpha: f64, beta: f64 },
    Table(TailTable),
}

impl JumpSampler {
    pub fn new(measure: &Measure, eps: f64) -> Result<Self> {
        let lambda = measure.tail_intensity(eps)?;
        let mut sampler = JumpSampler {
            eps,
            lambda,
            acceptance: 1.0,
            method: Method::Empty,
        };
        if !(lambda > 1e-300) {
            return Ok(sampler);
        }
        match *measure.spec() {
            LevyMeasureSpec::TiltedPower { c, alpha, beta } => {
                let ln_c = libm::log(c);
                let ln_lambda = libm::log(lambda);
                // Envelope masses: c ε^{1−α} e^{−βε}/(α−1) and c ε^{−α} e^{−βε}/β.
                let pareto = if beta == 0.0 {
                    1.0
                } else if alpha > 1.0 {
                    libm::exp(ln_lambda - ln_c + beta * eps + (alpha - 1.0) * libm::log(eps) + libm::log(alpha - 1.0))
                } else {
                    0.0
                };
                let shifted = if beta > 0.0 {
                    libm::exp(ln_lambda - ln_c + beta * eps + alpha * libm::log(eps) + libm::log(beta))
                } else {
                    0.0
                };
                if pareto >= shifted && pareto >= MIN_ACCEPTANCE {
                    sampler.acceptance = pareto.min(1.0);
                    sampler.method = Method::Pareto {
                        exponent: -1.0 / (alpha - 1.0),
                        beta,
                    };
                } else if shifted >= MIN_ACCEPTANCE {
                    sampler.acceptance = shifted.min(1.0);
                    sampler.method = Method::Shifted { alpha, beta };
                } else {
                    let table = TailTable::tilted_power(c, alpha, beta, eps);
                    sampler.acceptance = (lambda / table.total).min(1.0);
                    sampler.method = Method::Table(table);
                }
            }
            LevyMeasureSpec::Tabulated { .. } => {
                let table = TailTable::tabulated(measure, eps);
                sampler.lambda = table.total;
                sampler.method = Method::Table(table);
            }
        }
        Ok(sampler)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `Λ(ε) = μ([ε, ∞))`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Expected fraction of proposals accepted.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn uses_table(&self) -> bool {
        matches!(self.method, Method::Table(_))
    }

    /// Whether any jump above `ε` can occur.
    pub fn is_empty(&self) -> bool {
        matches!(self.method, Method::Empty)
    }

    /// One jump size, always `≥ ε`. Panics if [`is_empty`](Self::is_empty).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let eps = self.eps;
        match &self.method {
            Method::Empty => panic!("no jumps above eps"),
            &Method::Pareto { exponent, beta } => loop {
                let xi = eps * libm::pow(open_unit(rng), exponent);
                if beta == 0.0 || open_unit(rng) < libm::exp(-beta * (xi - eps)) {
                    return xi;
                }
            },
            &Method::Shifted { alpha, beta } => loop {
                let xi = eps + standard_exponential(rng) / beta;
                if open_unit(rng) < libm::exp(-alpha * libm::log(xi / eps)) {
                    return xi;
                }
            },
            Method::Table(table) => table.sample(rng),
        }
    }
}

/// One draw from `spec` restricted to `[ε, ∞)`. Builds the sampler on every
/// call; reuse a [`JumpSampler`] for repeated draws.
pub fn sample_jump<R: Rng + ?Sized>(spec: &LevyMeasureSpec, eps: f64, rng: &mut R) -> Result<f64> {
    let sampler = JumpSampler::new(&Measure::new(spec.clone())?, eps)?;
    if sampler.is_empty() {
        return Err(domain("tail intensity vanishes at this truncation level"));
    }
    Ok(sampler.sample(rng))
}

/// Density pieces with closed-form mass and inverse CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    /// `scale·ξ^{−power}` on `[a, b]`, `b` possibly infinite when `power > 1`.
    PowerLaw { a: f64, b: f64, power: f64, scale: f64 },
    /// `d·e^{slope(ξ−a)}` on `[a, b]`.
    LogLinear { a: f64, b: f64, d: f64, slope: f64 },
    /// Straight line from `da` at `a` to `db` at `b`.
    Linear { a: f64, b: f64, da: f64, db: f64 },
    /// `d·e^{−rate(ξ−a)}` on `[a, ∞)`.
    ExpTail { a: f64, d: f64, rate: f64 },
}

impl Segment {
    fn mass(&self) -> f64 {
        match *self {
            Segment::PowerLaw { a, b, power, scale } => {
                if power == 1.0 {
                    scale * libm::log(b / a)
                } else {
                    let e = 1.0 - power;
                    scale * (libm::pow(b, e) - libm::pow(a, e)) / e
                }
            }
            Segment::LogLinear { a, b, d, slope } => {
                let len = b - a;
                if (slope * len).abs() < 1e-12 {
                    d * len
                } else {
                    d * libm::expm1(slope * len) / slope
                }
            }
            Segment::Linear { a, b, da, db } => 0.5 * (da + db) * (b - a),
            Segment::ExpTail { d, rate, .. } => d / rate,
        }
    }

    /// Inverse CDF of the normalised segment at `v ∈ (0, 1)`.
    fn quantile(&self, v: f64) -> f64 {
        let xi = match *self {
            Segment::PowerLaw { a, b, power, .. } => {
                if power == 1.0 {
                    a * libm::exp(v * libm::log(b / a))
                } else {
                    let e = 1.0 - power;
                    let (pa, pb) = (libm::pow(a, e), libm::pow(b, e));
                    libm::pow(pa + v * (pb - pa), 1.0 / e)
                }
            }
            Segment::LogLinear { a, b, slope, .. } => {
                let len = b - a;
                if (slope * len).abs() < 1e-12 {
                    a + v * len
                } else {
                    a + libm::log1p(v * libm::expm1(slope * len)) / slope
                }
            }
            Segment::Linear { a, b, da, db } => {
                let len = b - a;
                let m = 0.5 * (da + db) * len * v;
                // d_a s + (d_b − d_a) s²/(2L) = m, rationalised root
                let disc = da * da + 2.0 * (db - da) * m / len;
                a + 2.0 * m / (da + libm::sqrt(disc.max(0.0)))
            }
            Segment::ExpTail { a, rate, .. } => a - libm::log1p(-v) / rate,
        };
        match *self {
            Segment::ExpTail { a, .. } => xi.max(a),
            Segment::PowerLaw { a, b, .. } | Segment::LogLinear { a, b, .. } | Segment::Linear { a, b, .. } => {
                xi.clamp(a, b)
            }
        }
    }

    fn start(&self) -> f64 {
        match *self {
            Segment::PowerLaw { a, .. }
            | Segment::LogLinear { a, .. }
            | Segment::Linear { a, .. }
            | Segment::ExpTail { a, .. } => a,
        }
    }
}

/// Ratio of target to envelope density on a segment, as a function of `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Correction {
    Exact,
    /// Target `ξ^{−α}e^{−βξ}` under envelope `ξ^{−α}e^{−βa}`.
    Tilt(f64),
    /// Target `ξ^{−α}e^{−βξ}` under envelope `a^{−α}e^{−βξ}`.
    Power(f64),
}

/// Piecewise inverse-CDF sampler over `[ε, ∞)`, optionally used as a
/// rejection envelope.
#[derive(Debug, Clone)]
pub struct TailTable {
    segments: Vec<(Segment, Correction)>,
    cumulative: Vec<f64>,
    total: f64,
}

impl TailTable {
    fn from_segments(segments: Vec<(Segment, Correction)>) -> Self {
        let mut cumulative = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for (seg, _) in &segments {
            total += seg.mass();
            cumulative.push(total);
        }
        TailTable {
            segments,
            cumulative,
            total,
        }
    }

    /// Geometric grid over `[ε, ε + 50/β]` with power-law pieces under a
    /// constant tilt, then an exponential tail.
    fn tilted_power(c: f64, alpha: f64, beta: f64, eps: f64) -> Self {
        let end = eps + 50.0 / beta;
        let mut segments = Vec::new();
        let mut a = eps;
        while a < end {
            // Keep β·(b − a) ≤ 0.05 and b/a ≤ 1.1 so each piece accepts ≥ 90%.
            let b = (a * 1.1).min(a + 0.05 / beta).min(end);
            let scale = c * libm::exp(-beta * a);
            segments.push((
                Segment::PowerLaw {
                    a,
                    b,
                    power: alpha,
                    scale,
                },
                Correction::Tilt(beta),
            ));
            a = b;
        }
        segments.push((
            Segment::ExpTail {
                a: end,
                d: c * libm::exp(-alpha * libm::log(end) - beta * end),
                rate: beta,
            },
            Correction::Power(alpha),
        ));
        Self::from_segments(segments)
    }

    /// Exact pieces of a tabulated density beyond `ε`.
    fn tabulated(measure: &Measure, eps: f64) -> Self {
        let xs = measure.table_nodes();
        let ls = measure.table_ln_densities();
        let n = xs.len();
        let mut segments = Vec::new();
        if eps < xs[0] && ls[0].is_finite() {
            let p = measure.left_exponent();
            segments.push((
                Segment::PowerLaw {
                    a: eps,
                    b: xs[0],
                    power: p,
                    scale: libm::exp(ls[0] + p * libm::log(xs[0])),
                },
                Correction::Exact,
            ));
        }
        for i in 0..n - 1 {
            let (mut x0, x1) = (xs[i], xs[i + 1]);
            if x1 <= eps {
                continue;
            }
            let (l0, l1) = (ls[i], ls[i + 1]);
            if x0 < eps {
                x0 = eps;
            }
            let d0 = measure.density(x0);
            if l0.is_finite() && l1.is_finite() {
                segments.push((
                    Segment::LogLinear {
                        a: x0,
                        b: x1,
                        d: d0,
                        slope: (l1 - l0) / (xs[i + 1] - xs[i]),
                    },
                    Correction::Exact,
                ));
            } else if l0.is_finite() || l1.is_finite() {
                segments.push((
                    Segment::Linear {
                        a: x0,
                        b: x1,
                        da: d0,
                        db: libm::exp(l1),
                    },
                    Correction::Exact,
                ));
            }
        }
        let start = eps.max(xs[n - 1]);
        let d_end = measure.density(start);
        if d_end > 0.0 {
            segments.push((
                Segment::ExpTail {
                    a: start,
                    d: d_end,
                    rate: measure.tilt_rate(),
                },
                Correction::Exact,
            ));
        }
        Self::from_segments(segments)
    }

    /// Total envelope mass.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let target = open_unit(rng) * self.total;
            let i = self.cumulative.partition_point(|&c| c < target).min(self.segments.len() - 1);
            let (seg, corr) = self.segments[i];
            let xi = seg.quantile(open_unit(rng));
            let accept = match corr {
                Correction::Exact => return xi,
                Correction::Tilt(beta) => libm::exp(-beta * (xi - seg.start())),
                Correction::Power(alpha) => libm::exp(-alpha * libm::log(xi / seg.start())),
            };
            if open_unit(rng) < accept {
                return xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_stream;
    use core::f64::consts::PI;

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        d
    }

    // 1% critical value of the one-sample KS statistic.
    fn ks_critical(n: usize) -> f64 {
        1.628 / libm::sqrt(n as f64)
    }

    #[test]
    fn untilted_pareto_is_inverse_square() {
        let c = 0.5 / libm::sqrt(PI);
        let mu = Measure::new(LevyMeasureSpec::tilted_power(c, 1.5, 0.0)).unwrap();
        let s = JumpSampler::new(&mu, 0.01).unwrap();
        assert_eq!(s.acceptance(), 1.0);
        let mut a = path_stream(3, 0);
        let mut b = path_stream(3, 0);
        for _ in 0..100 {
            let u = open_unit(&mut b);
            let want = 0.01 / (u * u);
            assert!((s.sample(&mut a) - want).abs() <= 4.0 * f64::EPSILON * want);
        }
    }

    #[test]
    fn tilted_power_ks() {
        let mu = Measure::new(LevyMeasureSpec::tempered_stable_half()).unwrap();
        let eps = 0.5;
        let s = JumpSampler::new(&mu, eps).unwrap();
        let lambda = s.lambda();
        let mut rng = path_stream(11, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= eps));
        let cdf = |x: f64| 1.0 - mu.tail_intensity(x).unwrap() / lambda;
        let d = ks_statistic(xs, cdf);
        assert!(d < ks_critical(n), "{d}");
    }

    #[test]
    fn table_fallback_ks() {
        // The fallback is rarely selected; exercise it directly.
        let (c, alpha, beta, eps) = (1.0, 1.5, 3.0, 0.2);
        let mu = Measure::new(LevyMeasureSpec::tilted_power(c, alpha, beta)).unwrap();
        let lambda = mu.tail_intensity(eps).unwrap();
        let table = TailTable::tilted_power(c, alpha, beta, eps);
        let acc = lambda / table.total();
        assert!(acc > 0.9 && acc <= 1.0 + 1e-12, "{acc}");
        let mut rng = path_stream(0, 1);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| table.sample(&mut rng)).collect();
        let d = ks_statistic(xs, |x| 1.0 - mu.tail_intensity(x).unwrap() / lambda);
        assert!(d < ks_critical(n), "{d}");
    }

    #[test]
    fn shifted_proposal_wins_for_steep_tilt() {
        let mu = Measure::new(LevyMeasureSpec::tilted_power(1.0, 1.5, 50.0)).unwrap();
        let s = JumpSampler::new(&mu, 1.0).unwrap();
        assert!(matches!(s.method, Method::Shifted { .. }));
        assert!(s.acceptance() > 0.9);
        let mut rng = path_stream(9, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let d = ks_statistic(xs, |x| 1.0 - mu.tail_intensity(x).unwrap() / s.lambda());
        assert!(d < ks_critical(n), "{d}");
    }

    #[test]
    fn tabulated_table_mass_matches_quadrature() {
        let nodes: Vec<f64> = (1..=200).map(|i| i as f64 * 0.05).collect();
        let spec = LevyMeasureSpec::tabulate(&nodes, |x| libm::exp(-2.0 * x) / x, 1.0, 2.0);
        let mu = Measure::new(spec).unwrap();
        for &eps in &[0.01, 0.05, 0.333, 4.0, 12.0] {
            let table = TailTable::tabulated(&mu, eps);
            let lambda = mu.tail_intensity(eps).unwrap();
            assert!((table.total() - lambda).abs() < 1e-10 * lambda, "{eps}");
        }
    }

    #[test]
    fn tabulated_ks_with_zero_node() {
        let spec = LevyMeasureSpec::Tabulated {
            points: alloc::vec![(0.5, 1.0), (1.0, 0.0), (2.0, 3.0), (3.0, 0.5)],
            left_exponent: 0.5,
            tilt_rate: 2.0,
        };
        let mu = Measure::new(spec).unwrap();
        let eps = 0.2;
        let s = JumpSampler::new(&mu, eps).unwrap();
        assert!(s.uses_table());
        let mut rng = path_stream(1, 2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= eps));
        let d = ks_statistic(xs, |x| 1.0 - mu.tail_intensity(x).unwrap() / s.lambda());
        assert!(d < ks_critical(n), "{d}");
    }

    #[test]
    fn vanishing_tail_is_empty() {
        let mu = Measure::new(LevyMeasureSpec::tilted_power(1.0, 1.5, 2.0)).unwrap();
        let s = JumpSampler::new(&mu, 400.0).unwrap();
        assert!(s.is_empty());
        assert!(sample_jump(mu.spec(), 400.0, &mut path_stream(0, 0)).is_err());
    }
}
