//! Experiment reports and their JSON/CSV forms.

use std::fmt::Write as _;

use serde_json::{json, Value};
use strictjump_core::{LevyMeasureSpec, McEstimate};

use crate::spec_io::spec_to_value;

/// Floats in CSV output: 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON has no infinities; those become `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Where a row's analytic value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheorySource {
    /// `exp(x0·g(t, u))` from the adaptive Riccati solve.
    RiccatiSolve,
    /// Built from `g₋(t, 1)`, the time-map inversion.
    MinimalSolution,
    /// `x0·e^{−bt}` from the validated drift `b`.
    DriftDecay,
    /// `u = 0` or `t = 0`: no computation needed.
    Trivial,
}

impl TheorySource {
    pub fn as_str(self) -> &'static str {
        match self {
            TheorySource::RiccatiSolve => "riccati.solve",
            TheorySource::MinimalSolution => "riccati.minimal_solution",
            TheorySource::DriftDecay => "measure.validate(b)",
            TheorySource::Trivial => "trivial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    /// Exponent of the estimated moment; `None` for the plain mean.
    pub u: Option<f64>,
    /// Truncation level, set on bias sweeps.
    pub eps: Option<f64>,
    pub estimate: McEstimate,
    pub source: TheorySource,
    /// Rows with an infinite-variance estimator are reported but not judged.
    pub excluded: bool,
    pub pass: bool,
    /// `|mean − previous mean|` on bias sweeps.
    pub diff: Option<f64>,
}

/// A report-level check that is not a per-row z test.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Experiment parameters echoed into the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub x0: f64,
    pub paths: usize,
    pub eps: f64,
    pub cap: f64,
    pub max_events: u64,
    pub seed: u64,
    pub z_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: &'static str,
    pub spec: LevyMeasureSpec,
    pub config: ReportConfig,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.excluded || r.pass) && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let e = &r.estimate;
                let mut row = json!({
                    "t": r.t,
                    "u": r.u,
                    "mean": num(e.mean),
                    "stderr": num(e.stderr),
                    "n_paths": e.n_paths,
                    "theory": num(e.theory),
                    "theory_source": r.source.as_str(),
                    "z": num(e.z_score),
                    "pass": if r.excluded { Value::Null } else { json!(r.pass) },
                });
                if let Some(eps) = r.eps {
                    row["eps"] = json!(eps);
                }
                if r.excluded {
                    row["warning"] = json!("variance");
                }
                if let Some(d) = r.diff {
                    row["diff"] = num(d);
                }
                row
            })
            .collect();
        let c = &self.config;
        json!({
            "experiment": self.experiment,
            "seed": c.seed,
            "spec": spec_to_value(&self.spec),
            "config": {
                "x0": c.x0,
                "paths": c.paths,
                "eps": c.eps,
                "cap": c.cap,
                "max_events": c.max_events,
                "z_threshold": c.z_threshold,
                "interval": "normal approximation",
            },
            "rows": rows,
            "checks": self.checks.iter().map(|k| json!({"name": k.name, "pass": k.pass, "detail": k.detail})).collect::<Vec<_>>(),
            "warnings": self.warnings,
            "pass": self.passed(),
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }

    /// Columns `t,u,mean,stderr,theory,z,pass`, plus `eps,diff` on bias
    /// sweeps. Excluded rows carry `excluded` in the pass column.
    pub fn to_csv(&self) -> String {
        let sweep = self.rows.iter().any(|r| r.eps.is_some());
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "# experiment={}", self.experiment);
        let _ = writeln!(out, "# seed={}", c.seed);
        let _ = writeln!(out, "# paths={}", c.paths);
        let _ = writeln!(out, "# z_threshold={}", c.z_threshold);
        out.push_str("t,u,mean,stderr,theory,z,pass");
        out.push_str(if sweep { ",eps,diff\n" } else { "\n" });
        for r in &self.rows {
            let e = &r.estimate;
            let pass = if r.excluded {
                "excluded"
            } else if r.pass {
                "true"
            } else {
                "false"
            };
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(r.t),
                r.u.map(fmt_f64).unwrap_or_default(),
                fmt_f64(e.mean),
                fmt_f64(e.stderr),
                fmt_f64(e.theory),
                fmt_f64(e.z_score),
                pass
            );
            if sweep {
                let _ = write!(
                    out,
                    ",{},{}",
                    r.eps.map(fmt_f64).unwrap_or_default(),
                    r.diff.map(fmt_f64).unwrap_or_default()
                );
            }
            out.push('\n');
        }
        out
    }
}
