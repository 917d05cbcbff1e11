//! Acceptance suite: one line per criterion with its tolerance and time budget.
//! Exits non-zero if any criterion fails or runs over budget.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use strictjump::montecarlo::{bias_sweep, estimate_mean, estimate_mgf, estimate_survival, McConfig, Observable};
use strictjump::spec_io::parse_spec;
use strictjump_core::measure::{
    gamma_first_moment_residual, gamma_identity_residual, harmonic_residual, htransform_generator_residual,
};
use strictjump_core::riccati::DEFAULT_TOL;
use strictjump_core::{EngineConfig, LevyMeasureSpec, Measure, Riccati, TestFunction, Verdict};

const LN4: f64 = 1.3862943611198906;
const SEED: u64 = 20_240_611;

type Outcome = Result<String, String>;

fn half() -> LevyMeasureSpec {
    LevyMeasureSpec::tempered_stable_half()
}

fn spec_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn exp2() -> LevyMeasureSpec {
    parse_spec(&std::fs::read_to_string(spec_file("exp2_table.json")).unwrap()).unwrap()
}

// g(t, u) = 1 − (w(u) e^{−t/2} − 1)², w(u) = 1 − √(1 − u)
fn closed_g(t: f64, u: f64) -> f64 {
    let w = 1.0 - (1.0 - u).sqrt();
    let a = w * (-t / 2.0).exp() - 1.0;
    1.0 - a * a
}

fn closed_g_minus(alpha: f64, t: f64) -> f64 {
    1.0 - (1.0 - ((alpha - 2.0) * t).exp()).powf(1.0 / (2.0 - alpha))
}

fn mc(paths: usize) -> McConfig {
    McConfig::default()
        .with_paths(paths)
        .with_engine(EngineConfig::default().with_eps(1e-4).with_seed(SEED))
}

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gamma_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let alpha = 1.0 + i as f64 / 10.0;
        worst = worst.max(gamma_first_moment_residual(alpha).map_err(|e| e.to_string())?);
        for u in [-2.0, -1.0, 0.0, 0.5, 0.9, 1.0] {
            worst = worst.max(gamma_identity_residual(alpha, u).map_err(|e| e.to_string())?);
        }
    }
    check(worst <= 1e-8, format!("max residual {worst:.2e} <= 1e-8"))
}

fn closed_form_r() -> Outcome {
    let mu = Measure::new(half()).unwrap();
    let mut worst: f64 = 0.0;
    let n = 800;
    for i in 0..=n {
        let u = -3.0 + 3.999 * i as f64 / n as f64;
        let q = mu.r_function_quadrature(u).map_err(|e| e.to_string())?;
        worst = worst.max((q - ((1.0 - u) - (1.0 - u).sqrt())).abs());
    }
    check(worst <= 1e-8, format!("max |quadrature - closed form| {worst:.2e} <= 1e-8 on {} points", n + 1))
}

fn riccati_closed_form() -> Outcome {
    let r = Riccati::new(&half()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for u in [-1.0, 0.0, 0.5, 0.9] {
        let s = r.solve(u, 10.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
        for (&t, &g) in s.t_grid.iter().zip(&s.g_values) {
            worst = worst.max((g - closed_g(t, u)).abs());
        }
        for i in 0..=2000 {
            let t = 10.0 * i as f64 / 2000.0;
            worst = worst.max((s.value_at(t) - closed_g(t, u)).abs());
        }
    }
    check(worst <= 1e-8, format!("max error {worst:.2e} <= 1e-8 (steps and dense output)"))
}

fn minimal_solution() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [1.25, 1.5, 1.75] {
        let r = Riccati::new(&LevyMeasureSpec::normalized(alpha).unwrap()).map_err(|e| e.to_string())?;
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let g = r.minimal_solution(t).map_err(|e| e.to_string())?;
            worst = worst.max((g - closed_g_minus(alpha, t)).abs());
        }
    }
    check(worst <= 1e-6, format!("max error {worst:.2e} <= 1e-6"))
}

fn classifier() -> Outcome {
    let mut got = Vec::new();
    for alpha in [1.1, 1.25, 1.5, 1.75, 1.9] {
        let r = Riccati::new(&LevyMeasureSpec::normalized(alpha).unwrap()).map_err(|e| e.to_string())?;
        got.push((format!("alpha={alpha}"), r.classification().verdict, Verdict::Strict));
    }
    let r = Riccati::new(&exp2()).map_err(|e| e.to_string())?;
    got.push(("exp(-2xi) table".into(), r.classification().verdict, Verdict::TrueMartingale));
    let wrong: Vec<String> = got
        .iter()
        .filter(|(_, v, want)| v != want)
        .map(|(name, v, _)| format!("{name}: {}", v.as_str()))
        .collect();
    let inconclusive = got.iter().filter(|(_, v, _)| *v == Verdict::Inconclusive).count();
    check(
        wrong.is_empty() && inconclusive == 0,
        format!("{}/{} correct, {inconclusive} inconclusive {wrong:?}", got.len() - wrong.len(), got.len()),
    )
}

fn two_solutions() -> Outcome {
    let r = Riccati::new(&half()).map_err(|e| e.to_string())?;
    let g = |t: f64| r.minimal_solution(t).map_err(|e| e.to_string());
    let h = 1e-4;
    let mut worst_min: f64 = 0.0;
    for i in 0..100 {
        let t = 5.0 * (i as f64 + 0.5) / 100.0;
        let slope = (g(t + h)? - g(t - h)?) / (2.0 * h);
        worst_min = worst_min.max((slope - r.r(g(t)?).map_err(|e| e.to_string())?).abs());
    }
    // The constant branch: ġ = 0 and R(1) should vanish.
    let worst_const = r.r(1.0).map_err(|e| e.to_string())?.abs();
    let gap = 1.0 - g(5.0)?;
    check(
        worst_min <= 1e-6 && worst_const <= 1e-6 && gap >= 0.01,
        format!("residuals {worst_min:.2e} (minimal), {worst_const:.2e} (constant) <= 1e-6; gap at t=5 {gap:.4} >= 0.01"),
    )
}

fn mc_mean() -> Outcome {
    let e = estimate_mean(&half(), 1.0, 1.0, &mc(100_000)).map_err(|e| e.to_string())?;
    let theory = (-0.5f64).exp();
    check(
        (e.theory - theory).abs() < 1e-12 && e.z_score.abs() <= 3.0,
        format!("mean {:.6} +- {:.2e} vs {theory:.6}, z = {:+.3}", e.mean, e.stderr, e.z_score),
    )
}

fn mc_mgf() -> Outcome {
    let m = estimate_mgf(&half(), 1.0, 1.0, 0.5, &mc(100_000)).map_err(|e| e.to_string())?;
    let e = m.estimate;
    let theory = closed_g(1.0, 0.5).exp();
    check(
        (e.theory - theory).abs() < 1e-8 && e.z_score.abs() <= 3.0 && !m.variance_warning,
        format!("mean {:.6} +- {:.2e} vs {theory:.6}, z = {:+.3}", e.mean, e.stderr, e.z_score),
    )
}

fn survival() -> Outcome {
    let untilted = half().untilted().map_err(|e| e.to_string())?;
    let e = estimate_survival(&untilted, 1.0, LN4, &mc(100_000)).map_err(|e| e.to_string())?;
    let theory = (-0.25f64).exp();
    check(
        (e.theory - theory).abs() < 1e-8 && e.z_score.abs() <= 3.0,
        format!("P(tau > t) {:.6} +- {:.2e} vs {theory:.6}, z = {:+.3}", e.mean, e.stderr, e.z_score),
    )
}

fn generator_residuals() -> Outcome {
    let h = harmonic_residual(&half().untilted().unwrap()).map_err(|e| e.to_string())?;
    let points: [(&str, [f64; 5]); 3] = [
        ("bump", [0.6, 0.8, 1.0, 1.2, 1.4]),
        ("wide_bump", [0.4, 1.0, 1.5, 2.0, 2.6]),
        ("bump_pair", [0.5, 0.9, 1.5, 2.1, 2.6]),
    ];
    let mut worst: f64 = 0.0;
    for (id, xs) in points {
        let f = TestFunction::by_id(id).unwrap();
        for x in xs {
            worst = worst.max(htransform_generator_residual(&half(), x, &f).map_err(|e| e.to_string())?);
        }
    }
    check(
        h <= 1e-8 && worst <= 1e-6,
        format!("harmonic {h:.2e} <= 1e-8; h-transform max {worst:.2e} <= 1e-6 over 15 points"),
    )
}

fn truncation_bias() -> Outcome {
    let eps = [1e-2, 1e-3, 1e-4];
    let mut msgs = Vec::new();
    let mut ok = true;
    for (label, obs) in [("X_1", Observable::Mean), ("e^(X_1/2)", Observable::Mgf(0.5))] {
        let r = bias_sweep(&half(), 1.0, 1.0, obs, &eps, &mc(100_000)).map_err(|e| e.to_string())?;
        let c = &r.checks[0];
        ok &= c.pass;
        let diffs: Vec<String> = r.rows.iter().filter_map(|row| row.diff).map(|d| format!("{d:.2e}")).collect();
        msgs.push(format!("{label}: diffs [{}] {}", diffs.join(", "), if c.pass { "ok" } else { "GROWING" }));
    }
    check(ok, msgs.join("; "))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_strictjump"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("strictjump-acceptance-{}", std::process::id()));
    let half = spec_file("tempered_stable_half.json");
    let half = half.to_str().unwrap();
    let many = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4).to_string();
    let mut runs = Vec::new();
    for (k, threads) in ["1", many.as_str(), "1"].iter().enumerate() {
        let out = dir.join(format!("run{k}"));
        let o = out.to_str().unwrap();
        let sim = out.join("paths");
        run_cli(&["--threads", threads, "simulate", half, "--t-end", "2", "--paths", "6", "--seed", "11", "--eps", "1e-3", "--out-dir", sim.to_str().unwrap()])?;
        let exp = out.join("explosive");
        run_cli(&["--threads", threads, "simulate", half, "--explosive", "--t-end", "3", "--paths", "6", "--seed", "11", "--eps", "1e-3", "--out-dir", exp.to_str().unwrap()])?;
        run_cli(&["--threads", threads, "verify", "mgf", half, "--paths", "4000", "--seed", "11", "--out", o])?;
        run_cli(&["--threads", threads, "verify", "supermartingale", half, "--paths", "4000", "--seed", "11", "--out", o])?;
        let mut files = Vec::new();
        for name in ["mgf.json", "mgf.csv", "supermartingale.json", "supermartingale.csv"] {
            files.push(std::fs::read(out.join(name)).map_err(|e| e.to_string())?);
        }
        for i in 0..6 {
            for sub in [&sim, &exp] {
                files.push(std::fs::read(sub.join(format!("path_{i:06}.csv"))).map_err(|e| e.to_string())?);
            }
        }
        runs.push(files);
    }
    let _ = std::fs::remove_dir_all(&dir);
    let n = runs[0].len();
    check(
        runs[0] == runs[1] && runs[0] == runs[2],
        format!("{n} files byte-identical across 1, {many}, 1 threads"),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 12] = [
        ("gamma identities", 5, gamma_identities),
        ("closed-form R", 5, closed_form_r),
        ("Riccati solver vs closed form", 5, riccati_closed_form),
        ("minimal solution vs closed form", 10, minimal_solution),
        ("classifier ground truth", 10, classifier),
        ("two solutions through u = 1", 5, two_solutions),
        ("Monte Carlo mean", 180, mc_mean),
        ("Monte Carlo mgf at u = 0.5", 180, mc_mgf),
        ("survival of the explosive dual", 300, survival),
        ("harmonic and h-transform residuals", 30, generator_residuals),
        ("truncation-bias sweep", 600, truncation_bias),
        ("determinism across thread counts", 600, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{:>2}] {} {name}: {detail} ({:.2} s / {limit} s{})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
