//! The `strictjump` command line.
//!
//! Exit codes: 0 success, 1 bad input or numerical failure, 2 inconclusive
//! classification (or a defect curve requested for a true martingale),
//! 3 a verification or residual check ran but did not pass.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use strictjump_core::measure::{gamma_first_moment_residual, gamma_identity_residual};
use strictjump_core::riccati::{DEFAULT_MARGIN, DEFAULT_TOL};
use strictjump_core::simulate::Engine;
use strictjump_core::{EngineConfig, Error, LevyMeasureSpec, Riccati, Verdict};

use crate::manifest::{RunManifest, SeedSource};
use crate::montecarlo::{self, McConfig, Observable, DEFAULT_PATHS, DEFAULT_Z};
use crate::path_csv::path_to_csv;
use crate::report::{fmt_f64, ExperimentReport};
use crate::spec_io::{parse_spec, spec_hash, SpecError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Largest gamma-identity residual that `lemma-check` accepts.
pub const LEMMA_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "strictjump", version, about = "Strict local martingales from self-exciting jump processes")]
struct Cli {
    /// Worker threads for path simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether e^X − 1 is a strict local or a true martingale.
    Classify {
        config: PathBuf,
        /// Half-width of the inconclusive band around exponent 1.
        #[arg(long, alias = "tol", default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Solve ġ = R(g), g(0) = u0, and print t,g on an even grid.
    Riccati {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u0: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected value and defect of S = e^X − 1 along an even time grid.
    DefectCurve {
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate paths and write one CSV per path.
    Simulate(SimulateArgs),
    /// Monte Carlo checks against the analytic moments.
    Verify {
        #[command(subcommand)]
        which: Verify,
    },
    /// Residuals of the gamma-function identities on an (alpha, u) grid.
    LemmaCheck {
        #[arg(long, value_delimiter = ',', default_values_t = [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2.0, -1.0, 0.0, 0.5, 0.9, 1.0])]
        us: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Spec of the conservative measure μ; `--explosive` simulates its dual.
    config: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    paths: u64,
    /// Simulate the explosive process driven by μ̃ = e^ξ μ.
    #[arg(long)]
    explosive: bool,
    #[arg(long, default_value_t = 1e12)]
    cap: f64,
    #[arg(long, default_value_t = 10_000_000)]
    max_events: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// E[e^{uX_t}] against exp(x0·g(t, u)).
    Mgf(VerifyArgs),
    /// E[X_t] against x0·e^{−bt}.
    Mean(VerifyArgs),
    /// Survival of the explosive dual against exp(x0·(g₋(t, 1) − 1)).
    Survival(VerifyArgs),
    /// E[e^{X_t}] ≤ e^{x0} on a time grid, via the explosive dual.
    Supermartingale(VerifyArgs),
    /// Truncation-bias sweep over decreasing eps.
    Bias(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Moment exponent (mgf: default 0.5; bias: estimate e^{uX} instead of X).
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    paths: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for `<experiment>.json`, `.csv` and `.manifest.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1e12)]
    cap: f64,
    #[arg(long, default_value_t = 10_000_000)]
    max_events: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0, 4.0])]
    t_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Spec { path: PathBuf, source: SpecError },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Inconclusive { .. }) => EXIT_INCONCLUSIVE,
            _ => EXIT_ERROR,
        }
    }
}

type CliResult = Result<i32, CliError>;

/// Parse `args` (program name first), run the command and return its exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Classify { config, margin } => classify(&config, margin),
        Command::Riccati {
            config,
            u0,
            t_end,
            steps,
            tol,
            out,
        } => riccati(&config, u0, t_end, steps, tol, out.as_deref()),
        Command::DefectCurve {
            config,
            x0,
            t_max,
            steps,
            out,
        } => defect_curve(&config, x0, t_max, steps, out.as_deref()),
        Command::Simulate(args) => simulate(args),
        Command::Verify { which } => verify(which),
        Command::LemmaCheck { alphas, us, out } => lemma_check(&alphas, &us, out.as_deref()),
    }
}

fn read_spec(path: &Path) -> Result<LevyMeasureSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    parse_spec(&text).map_err(|source| CliError::Spec {
        path: path.into(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn write_manifest(manifest: &mut RunManifest, started: Instant, path: &Path) -> Result<(), CliError> {
    manifest.duration = started.elapsed();
    manifest.write(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

/// Print `text`, or write it to `out` with `<stem>.manifest.json` beside it.
fn emit(text: &str, out: Option<&Path>, manifest: &mut RunManifest, started: Instant) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            write_file(path, text)?;
            write_manifest(manifest, started, &path.with_extension("manifest.json"))
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> (u64, SeedSource) {
    match seed {
        Some(s) => (s, SeedSource::Flag),
        None => (rand::random(), SeedSource::Entropy),
    }
}

fn even_grid(t_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(CliError::Usage(format!(
            "need steps >= 1 and a finite t >= 0 (got steps = {steps}, t = {t_max})"
        )));
    }
    if steps == 1 {
        return Ok(vec![0.0]);
    }
    Ok((0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect())
}

fn classify(config: &Path, margin: f64) -> CliResult {
    let spec = read_spec(config)?;
    let riccati = Riccati::with_margin(&spec, margin)?;
    let c = riccati.classification();
    let finite = c.osgood_value.is_finite();
    let out = json!({
        "verdict": c.verdict.as_str(),
        "osgood_value": if finite { json!(c.osgood_value) } else { json!(null) },
        "osgood_finite": finite,
        "exponent_estimate": c.exponent_estimate,
        "exponent_stderr": c.exponent_stderr,
        "margin": margin,
        "spec_sha256": spec_hash(&spec),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("verdict serializes"));
    Ok(match c.verdict {
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    })
}

fn riccati(config: &Path, u0: f64, t_end: f64, steps: usize, tol: f64, out: Option<&Path>) -> CliResult {
    let started = Instant::now();
    let spec = read_spec(config)?;
    let grid = even_grid(t_end, steps)?;
    let riccati = Riccati::new(&spec)?;
    let mut text = String::new();
    let _ = writeln!(text, "# u0={}", fmt_f64(u0));
    let _ = writeln!(text, "# t_end={}", fmt_f64(t_end));
    let values: Vec<f64> = if u0 == 1.0 {
        text.push_str("# branch=minimal\n");
        grid.iter().map(|&t| riccati.g_minus(t)).collect::<Result<_, _>>()?
    } else {
        let sol = riccati.solve(u0, t_end, tol)?;
        let _ = writeln!(text, "# tol={}", fmt_f64(tol));
        let _ = writeln!(text, "# max_residual={}", fmt_f64(sol.max_residual));
        let _ = writeln!(text, "# steps_taken={}", sol.steps_taken);
        grid.iter().map(|&t| sol.value_at(t)).collect()
    };
    text.push_str("t,g\n");
    for (t, g) in grid.iter().zip(&values) {
        let _ = writeln!(text, "{},{}", fmt_f64(*t), fmt_f64(*g));
    }
    let mut manifest = RunManifest::new("riccati");
    manifest.spec_sha256 = Some(spec_hash(&spec));
    manifest.param("u0", u0).param("t_end", t_end).param("steps", steps).param("tol", tol);
    emit(&text, out, &mut manifest, started)?;
    Ok(EXIT_OK)
}

fn defect_curve(config: &Path, x0: f64, t_max: f64, steps: usize, out: Option<&Path>) -> CliResult {
    let started = Instant::now();
    let spec = read_spec(config)?;
    let grid = even_grid(t_max, steps)?;
    let riccati = Riccati::new(&spec)?;
    match riccati.classification().verdict {
        Verdict::Strict => {}
        Verdict::TrueMartingale => {
            eprintln!("defect identically zero: e^X - 1 is a true martingale for this measure");
            return Ok(EXIT_INCONCLUSIVE);
        }
        Verdict::Inconclusive => {
            eprintln!("classification inconclusive: no defect curve");
            return Ok(EXIT_INCONCLUSIVE);
        }
    }
    let mut text = String::new();
    let _ = writeln!(text, "# x0={}", fmt_f64(x0));
    text.push_str("t,g_minus,expected_S,defect\n");
    for &t in &grid {
        let g = riccati.g_minus(t)?;
        let expected = (x0 * g).exp_m1();
        let defect = riccati.martingale_defect(x0, t)?;
        let _ = writeln!(text, "{},{},{},{}", fmt_f64(t), fmt_f64(g), fmt_f64(expected), fmt_f64(defect));
    }
    let mut manifest = RunManifest::new("defect-curve");
    manifest.spec_sha256 = Some(spec_hash(&spec));
    manifest.param("x0", x0).param("t_max", t_max).param("steps", steps);
    emit(&text, out, &mut manifest, started)?;
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs) -> CliResult {
    let started = Instant::now();
    let spec = read_spec(&a.config)?;
    let (seed, source) = resolve_seed(a.seed);
    let mut config = EngineConfig::default().with_eps(a.eps).with_seed(seed).with_cap(a.cap);
    config.max_events = a.max_events;
    let engine = if a.explosive {
        Engine::explosive(&spec.untilted()?, config)?
    } else {
        Engine::conservative(&spec, config)?
    };
    let csvs: Vec<String> = (0..a.paths)
        .into_par_iter()
        .map(|i| engine.path(a.x0, a.t_end, i).map(|p| path_to_csv(&p)))
        .collect::<Result<_, _>>()?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    for (i, csv) in csvs.iter().enumerate() {
        write_file(&a.out_dir.join(format!("path_{i:06}.csv")), csv)?;
    }
    let mut manifest = RunManifest::new(if a.explosive { "simulate --explosive" } else { "simulate" });
    manifest.spec_sha256 = Some(spec_hash(&spec));
    manifest.seed = Some((seed, source));
    manifest
        .param("x0", a.x0)
        .param("t_end", a.t_end)
        .param("eps", a.eps)
        .param("paths", a.paths)
        .param("explosive", a.explosive)
        .param("cap", a.cap)
        .param("max_events", a.max_events);
    write_manifest(&mut manifest, started, &a.out_dir.join("manifest.json"))?;
    println!("wrote {} path file(s) to {}", a.paths, a.out_dir.display());
    Ok(EXIT_OK)
}

fn verify(which: Verify) -> CliResult {
    let started = Instant::now();
    let (name, a) = match &which {
        Verify::Mgf(a) => ("mgf", a),
        Verify::Mean(a) => ("mean", a),
        Verify::Survival(a) => ("survival", a),
        Verify::Supermartingale(a) => ("supermartingale", a),
        Verify::Bias(a) => ("bias", a),
    };
    let spec = read_spec(&a.config)?;
    let (seed, source) = resolve_seed(a.seed);
    let mut engine = EngineConfig::default().with_eps(a.eps).with_seed(seed).with_cap(a.cap);
    engine.max_events = a.max_events;
    let mc = McConfig {
        paths: a.paths,
        engine,
        z_threshold: a.z,
    };
    let report = match which {
        Verify::Mgf(_) => montecarlo::mgf_report(&spec, a.x0, a.t, a.u.unwrap_or(0.5), &mc)?,
        Verify::Mean(_) => montecarlo::mean_report(&spec, a.x0, a.t, &mc)?,
        Verify::Survival(_) => montecarlo::survival_report(&spec, a.x0, a.t, &mc)?,
        Verify::Supermartingale(_) => montecarlo::supermartingale_sweep(&spec, a.x0, &a.t_grid, &mc)?,
        Verify::Bias(_) => {
            let observable = a.u.map_or(Observable::Mean, Observable::Mgf);
            montecarlo::bias_sweep(&spec, a.x0, a.t, observable, &a.eps_list, &mc)?
        }
    };
    std::fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    write_file(&a.out.join(format!("{name}.json")), &report.to_json_string())?;
    write_file(&a.out.join(format!("{name}.csv")), &report.to_csv())?;
    let mut manifest = RunManifest::new(format!("verify {name}"));
    manifest.spec_sha256 = Some(spec_hash(&spec));
    manifest.seed = Some((seed, source));
    manifest
        .param("x0", a.x0)
        .param("t", a.t)
        .param("u", a.u)
        .param("paths", a.paths)
        .param("eps", a.eps)
        .param("cap", a.cap)
        .param("max_events", a.max_events)
        .param("z", a.z);
    if name == "supermartingale" {
        manifest.param("t_grid", a.t_grid.clone());
    }
    if name == "bias" {
        manifest.param("eps_list", a.eps_list.clone());
    }
    write_manifest(&mut manifest, started, &a.out.join(format!("{name}.manifest.json")))?;
    print_summary(&report);
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn print_summary(report: &ExperimentReport) {
    println!("{} (seed {}, {} paths)", report.experiment, report.config.seed, report.config.paths);
    for r in &report.rows {
        let e = &r.estimate;
        let verdict = if r.excluded {
            "excluded"
        } else if r.pass {
            "pass"
        } else {
            "FAIL"
        };
        let u = r.u.map_or(String::from("-"), |u| format!("{u}"));
        println!(
            "  t={} u={u} mean={:.6} stderr={:.2e} theory={:.6} z={:+.3} {verdict}",
            r.t, e.mean, e.stderr, e.theory, e.z_score
        );
    }
    for c in &report.checks {
        println!("  check {}: {} ({})", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
    }
    for w in &report.warnings {
        println!("  warning: {w}");
    }
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
}

fn lemma_check(alphas: &[f64], us: &[f64], out: Option<&Path>) -> CliResult {
    let started = Instant::now();
    let mut text = String::from("alpha,u,gamma1_residual,gamma2_residual\n");
    let mut worst: f64 = 0.0;
    for &alpha in alphas {
        let r2 = gamma_first_moment_residual(alpha)?;
        worst = worst.max(r2);
        for &u in us {
            let r1 = gamma_identity_residual(alpha, u)?;
            worst = worst.max(r1);
            let _ = writeln!(text, "{},{},{},{}", fmt_f64(alpha), fmt_f64(u), fmt_f64(r1), fmt_f64(r2));
        }
    }
    let mut manifest = RunManifest::new("lemma-check");
    manifest.param("alphas", alphas.to_vec()).param("us", us.to_vec());
    emit(&text, out, &mut manifest, started)?;
    eprintln!("max residual {worst:.3e} (tolerance {LEMMA_TOL:e})");
    Ok(if worst <= LEMMA_TOL { EXIT_OK } else { EXIT_CHECK_FAILED })
}
