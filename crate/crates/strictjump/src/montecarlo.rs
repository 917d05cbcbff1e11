//! Monte Carlo checks of simulated paths against the analytic moments.
//!
//! Paths fan out over the rayon pool. Each path draws from its own stream
//! keyed by `(seed, index)` and results are collected in index order before
//! pairwise summation, so every estimate is a pure function of its inputs
//! whatever the thread count.

use rayon::prelude::*;
use strictjump_core::simulate::{Engine, Terminal};
use strictjump_core::{EngineConfig, Error, LevyMeasureSpec, McEstimate, PathValue, Result, Riccati, Verdict};

use crate::report::{Check, ExperimentReport, ReportConfig, ReportRow, TheorySource};

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_Z: f64 = 3.0;
/// Above this `u` the estimator `e^{uX}` needs a moment of order `2u > 1`,
/// which the measures here need not have.
pub const MGF_VARIANCE_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub engine: EngineConfig,
    pub z_threshold: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: DEFAULT_PATHS,
            engine: EngineConfig::default(),
            z_threshold: DEFAULT_Z,
        }
    }
}

impl McConfig {
    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_engine(mut self, engine: EngineConfig) -> Self {
        self.engine = engine;
        self
    }

    fn check(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 paths (got {})", self.paths)));
        }
        if !(self.z_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!("z threshold must be positive (got {})", self.z_threshold)));
        }
        Ok(())
    }

    fn report_config(&self, x0: f64) -> ReportConfig {
        ReportConfig {
            x0,
            paths: self.paths,
            eps: self.engine.eps,
            cap: self.engine.cap,
            max_events: self.engine.max_events,
            seed: self.engine.seed,
            z_threshold: self.z_threshold,
        }
    }
}

/// What a bias sweep estimates at each truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Mean,
    Mgf(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfEstimate {
    pub estimate: McEstimate,
    /// Set when `u > 0.5`: the estimate is reported but its z score means little.
    pub variance_warning: bool,
}

fn terminals(engine: &Engine, x0: f64, t: f64, paths: usize) -> Result<Vec<Terminal>> {
    (0..paths as u64).into_par_iter().map(|i| engine.terminal(x0, t, i)).collect()
}

fn values(engine: &Engine, x0: f64, t: f64, paths: usize, f: impl Fn(f64) -> f64 + Sync) -> Result<Vec<f64>> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            Ok(match engine.terminal(x0, t, i)?.value {
                PathValue::Value(x) => f(x),
                PathValue::Exploded => f(f64::INFINITY),
            })
        })
        .collect()
}

fn mgf_theory(riccati: &Riccati, x0: f64, t: f64, u: f64) -> Result<(f64, TheorySource)> {
    let source = if u == 0.0 || t == 0.0 {
        TheorySource::Trivial
    } else if u == 1.0 {
        TheorySource::MinimalSolution
    } else {
        TheorySource::RiccatiSolve
    };
    Ok((riccati.expected_value(x0, t, u)?, source))
}

fn mgf_with(engine: &Engine, riccati: &Riccati, x0: f64, t: f64, u: f64, paths: usize) -> Result<(MgfEstimate, TheorySource)> {
    let (theory, source) = mgf_theory(riccati, x0, t, u)?;
    let estimate = if u == 0.0 {
        McEstimate::new(1.0, 0.0, paths, theory)
    } else {
        McEstimate::from_samples(&values(engine, x0, t, paths, |x| (u * x).exp())?, theory)
    };
    let estimate = MgfEstimate {
        estimate,
        variance_warning: u > MGF_VARIANCE_LIMIT,
    };
    Ok((estimate, source))
}

/// `E[e^{u X_t}]` against `exp(x0·g(t, u))`.
pub fn estimate_mgf(spec: &LevyMeasureSpec, x0: f64, t: f64, u: f64, config: &McConfig) -> Result<MgfEstimate> {
    config.check()?;
    let riccati = Riccati::new(spec)?;
    let engine = Engine::conservative(spec, config.engine)?;
    Ok(mgf_with(&engine, &riccati, x0, t, u, config.paths)?.0)
}

fn mean_with(engine: &Engine, b: f64, x0: f64, t: f64, paths: usize) -> Result<McEstimate> {
    let theory = x0 * (-b * t).exp();
    Ok(McEstimate::from_samples(&values(engine, x0, t, paths, |x| x)?, theory))
}

/// `E[X_t]` against `x0·e^{−bt}`.
pub fn estimate_mean(spec: &LevyMeasureSpec, x0: f64, t: f64, config: &McConfig) -> Result<McEstimate> {
    config.check()?;
    let engine = Engine::conservative(spec, config.engine)?;
    let b = strictjump_core::measure::validate(spec)?.b;
    mean_with(&engine, b, x0, t, config.paths)
}

/// `g₋(t, 1)` for the conservative measure dual to `untilted`.
fn dual_riccati(untilted: &LevyMeasureSpec) -> Result<Riccati> {
    let riccati = Riccati::new(&untilted.tilted()?)?;
    match riccati.classification() {
        c if c.verdict == Verdict::Inconclusive => Err(Error::Inconclusive {
            exponent: c.exponent_estimate,
        }),
        _ => Ok(riccati),
    }
}

fn survivors(terms: &[Terminal], t: f64) -> usize {
    terms.iter().filter(|k| k.explosion_time.is_none_or(|tau| tau > t)).count()
}

/// Fraction of explosive paths driven by `untilted` still finite at `t`,
/// against `exp(x0·(g₋(t, 1) − 1))` for the tilted measure.
pub fn estimate_survival(untilted: &LevyMeasureSpec, x0: f64, t: f64, config: &McConfig) -> Result<McEstimate> {
    config.check()?;
    let riccati = dual_riccati(untilted)?;
    let theory = (x0 * (riccati.g_minus(t)? - 1.0)).exp();
    let engine = Engine::explosive(untilted, config.engine)?;
    let terms = terminals(&engine, x0, t, config.paths)?;
    Ok(McEstimate::from_successes(survivors(&terms, t), config.paths, theory))
}

fn row(t: f64, u: Option<f64>, estimate: McEstimate, source: TheorySource, z: f64) -> ReportRow {
    ReportRow {
        t,
        u,
        eps: None,
        estimate,
        source,
        excluded: false,
        pass: estimate.passes(z),
        diff: None,
    }
}

pub fn mgf_report(spec: &LevyMeasureSpec, x0: f64, t: f64, u: f64, config: &McConfig) -> Result<ExperimentReport> {
    config.check()?;
    let riccati = Riccati::new(spec)?;
    let engine = Engine::conservative(spec, config.engine)?;
    let (m, source) = mgf_with(&engine, &riccati, x0, t, u, config.paths)?;
    let mut r = row(t, Some(u), m.estimate, source, config.z_threshold);
    let mut warnings = Vec::new();
    if m.variance_warning {
        r.excluded = true;
        warnings.push(format!("u = {u} > {MGF_VARIANCE_LIMIT}: e^(uX) may have infinite variance; row excluded"));
    }
    Ok(ExperimentReport {
        experiment: "mgf",
        spec: spec.clone(),
        config: config.report_config(x0),
        rows: vec![r],
        checks: vec![],
        warnings,
    })
}

pub fn mean_report(spec: &LevyMeasureSpec, x0: f64, t: f64, config: &McConfig) -> Result<ExperimentReport> {
    let est = estimate_mean(spec, x0, t, config)?;
    let source = if t == 0.0 { TheorySource::Trivial } else { TheorySource::DriftDecay };
    Ok(ExperimentReport {
        experiment: "mean",
        spec: spec.clone(),
        config: config.report_config(x0),
        rows: vec![row(t, None, est, source, config.z_threshold)],
        checks: vec![],
        warnings: vec![],
    })
}

/// Survival report for the explosive dual of the conservative `spec`.
pub fn survival_report(spec: &LevyMeasureSpec, x0: f64, t: f64, config: &McConfig) -> Result<ExperimentReport> {
    let est = estimate_survival(&spec.untilted()?, x0, t, config)?;
    let source = if t == 0.0 { TheorySource::Trivial } else { TheorySource::MinimalSolution };
    Ok(ExperimentReport {
        experiment: "survival",
        spec: spec.clone(),
        config: config.report_config(x0),
        rows: vec![row(t, Some(1.0), est, source, config.z_threshold)],
        checks: vec![],
        warnings: vec![],
    })
}

/// `E[e^{X_t}]` on a time grid, estimated as `e^{x0}·P̃(τ > t)` from one set
/// of explosive dual paths. Each row must respect `E[e^{X_t}] ≤ e^{x0}`; for
/// strict specs consecutive rows must also drop by more than the noise in
/// the fraction of paths exploding in between.
pub fn supermartingale_sweep(spec: &LevyMeasureSpec, x0: f64, t_grid: &[f64], config: &McConfig) -> Result<ExperimentReport> {
    config.check()?;
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("time grid must be nonnegative and strictly increasing".into()));
    }
    let untilted = spec.untilted()?;
    let riccati = dual_riccati(&untilted)?;
    let strict = riccati.classification().verdict == Verdict::Strict;
    let engine = Engine::explosive(&untilted, config.engine)?;
    let t_max = t_grid[t_grid.len() - 1];
    let terms = terminals(&engine, x0, t_max, config.paths)?;
    let n = config.paths;
    let start = x0.exp();

    let mut rows = Vec::with_capacity(t_grid.len());
    let mut counts = Vec::with_capacity(t_grid.len());
    let mut bound_ok = true;
    for &t in t_grid {
        let alive = survivors(&terms, t);
        let theory = (x0 * riccati.g_minus(t)?).exp();
        let est = McEstimate::from_successes(alive, n, 1.0).scaled(start, theory);
        let source = if t == 0.0 || !strict { TheorySource::Trivial } else { TheorySource::MinimalSolution };
        let mut r = row(t, Some(1.0), est, source, config.z_threshold);
        let below = est.mean <= start + config.z_threshold * est.stderr;
        bound_ok &= below;
        r.pass &= below;
        rows.push(r);
        counts.push(alive);
    }
    let mut checks = vec![Check {
        name: "supermartingale_bound",
        pass: bound_ok,
        detail: format!("mean <= e^x0 + {}*stderr on every row", config.z_threshold),
    }];
    if strict {
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for (i, w) in counts.windows(2).enumerate() {
            let q = (w[0] - w[1]) as f64 / n as f64;
            let drop = rows[i].estimate.mean - rows[i + 1].estimate.mean;
            let noise = start * (q * (1.0 - q) / n as f64).sqrt();
            let theory_drop = rows[i].estimate.theory - rows[i + 1].estimate.theory;
            ok &= theory_drop > 0.0 && drop > config.z_threshold * noise;
            if noise > 0.0 {
                worst = worst.min(drop / noise);
            }
        }
        checks.push(Check {
            name: "strict_decrease",
            pass: ok,
            detail: format!("smallest drop/noise ratio {worst:.3}"),
        });
    }
    Ok(ExperimentReport {
        experiment: "supermartingale",
        spec: spec.clone(),
        config: config.report_config(x0),
        rows,
        checks,
        warnings: vec![],
    })
}

/// One estimate per truncation level on common seeds. Successive differences
/// `Δ_k = |mean_k − mean_{k−1}|` must not grow by more than `z` standard
/// errors of `Δ_k − Δ_{k−1}`, bounded as if the estimates were independent.
pub fn bias_sweep(
    spec: &LevyMeasureSpec,
    x0: f64,
    t: f64,
    observable: Observable,
    eps_list: &[f64],
    config: &McConfig,
) -> Result<ExperimentReport> {
    config.check()?;
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidConfig("eps list must be nonempty and strictly decreasing".into()));
    }
    let riccati = Riccati::new(spec)?;
    let b = riccati.moments().b;
    let mut rows: Vec<ReportRow> = Vec::with_capacity(eps_list.len());
    let mut warnings = Vec::new();
    for &eps in eps_list {
        let engine = Engine::conservative(spec, config.engine.with_eps(eps))?;
        let (est, source, u, warn) = match observable {
            Observable::Mean => {
                let source = if t == 0.0 { TheorySource::Trivial } else { TheorySource::DriftDecay };
                (mean_with(&engine, b, x0, t, config.paths)?, source, None, false)
            }
            Observable::Mgf(u) => {
                let (m, source) = mgf_with(&engine, &riccati, x0, t, u, config.paths)?;
                (m.estimate, source, Some(u), m.variance_warning)
            }
        };
        let mut r = row(t, u, est, source, config.z_threshold);
        r.eps = Some(eps);
        r.excluded = warn;
        r.diff = rows.last().map(|p| (est.mean - p.estimate.mean).abs());
        rows.push(r);
    }
    if matches!(observable, Observable::Mgf(u) if u > MGF_VARIANCE_LIMIT) {
        warnings.push("u > 0.5: rows excluded, e^(uX) may have infinite variance".into());
    }
    let mut ok = true;
    let mut detail = String::from("no successive differences to compare");
    for k in 2..rows.len() {
        let se = |i: usize| rows[i].estimate.stderr;
        let noise = (se(k).powi(2) + 4.0 * se(k - 1).powi(2) + se(k - 2).powi(2)).sqrt();
        let (d_prev, d) = (rows[k - 1].diff.unwrap(), rows[k].diff.unwrap());
        ok &= d <= d_prev + config.z_threshold * noise;
        detail = format!("last comparison: diff {d:.3e} vs {d_prev:.3e} + {}*{noise:.3e}", config.z_threshold);
    }
    Ok(ExperimentReport {
        experiment: "bias",
        spec: spec.clone(),
        config: config.report_config(x0),
        rows,
        checks: vec![Check {
            name: "differences_nonincreasing",
            pass: ok,
            detail,
        }],
        warnings,
    })
}
