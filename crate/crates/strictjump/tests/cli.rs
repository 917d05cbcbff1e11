use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const LN4: f64 = 1.3862943611198906;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strictjump")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn half() -> String {
    spec("tempered_stable_half.json").to_str().unwrap().to_owned()
}

fn exp2() -> String {
    spec("exp2_table.json").to_str().unwrap().to_owned()
}

#[test]
fn classify_verdicts_and_exit_codes() {
    let o = run(&["classify", &half()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Strict");
    assert!((v["exponent_estimate"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(v["osgood_value"].as_f64().unwrap().is_finite());

    let o = run(&["classify", &exp2()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "TrueMartingale");
    assert_eq!(v["osgood_finite"], false);

    // Exponent α − 1 = 0.97 sits inside the default band around 1.
    let dir = tempfile::tempdir().unwrap();
    let near = dir.path().join("near.json");
    std::fs::write(&near, r#"{"kind": "tilted_power", "c": 1, "alpha": 1.97, "beta": 1}"#).unwrap();
    let o = run(&["classify", near.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Inconclusive");
    assert_eq!(run(&["defect-curve", near.to_str().unwrap(), "--t-max", "1"]).status.code(), Some(2));
    assert_eq!(run(&["classify", &half(), "--margin", "0.6"]).status.code(), Some(1));
}

#[test]
fn malformed_specs_exit_one_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"kind": "tilted_power", "c": 1, "alpha": 1.5, "bta": 1}"#, "bta"),
        (r#"{"kind": "tilted_power", "c": 1, "alpha": "1.5", "beta": 1}"#, "alpha"),
        (r#"{"kind": "tabulated", "points": [[1, 2], [0.5, 1]], "left_exponent": 0, "tilt_rate": 2}"#, "points"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&path, text).unwrap();
        let o = run(&["classify", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(&format!("`{key}`")), "{}", stderr(&o));
    }
    let path = dir.path().join("syntax.json");
    std::fs::write(&path, "{\"kind\": ").unwrap();
    assert_eq!(run(&["classify", path.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["classify", "/nonexistent/spec.json"]).status.code(), Some(1));
    // β < 1 leaves ∫ e^ξ μ infinite: a validation failure, not a shape one.
    let path = dir.path().join("heavy.json");
    std::fs::write(&path, r#"{"kind": "tilted_power", "c": 1, "alpha": 1.5, "beta": 0.5}"#).unwrap();
    assert_eq!(run(&["classify", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["classify"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn riccati_matches_the_closed_form() {
    let o = run(&["riccati", &half(), "--u0", "0.75", "--t-end", &LN4.to_string(), "--steps", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0], vec![0.0, 0.75]);
    assert!((rows[4][1] - 0.4375).abs() < 1e-9, "{}", rows[4][1]);

    let o = run(&["riccati", &half(), "--u0", "1", "--t-end", &LN4.to_string(), "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1], 1.0);
    assert!((rows[1][1] - 0.75).abs() < 1e-9);

    assert_eq!(run(&["riccati", &half(), "--u0", "1.5", "--t-end", "1"]).status.code(), Some(1));
}

#[test]
fn defect_curve_rows() {
    let o = run(&["defect-curve", &half(), "--x0", "1", "--t-max", &LN4.to_string(), "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("t,g_minus,expected_S,defect\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], vec![0.0, 1.0, 1f64.exp_m1(), 0.0]);
    assert!((rows[2][0] - LN4).abs() < 1e-15);
    assert!((rows[2][1] - 0.75).abs() < 1e-9);
    assert!((rows[2][2] - 0.75f64.exp_m1()).abs() < 1e-8);
    assert!((rows[2][3] - (1f64.exp() - 0.75f64.exp())).abs() < 1e-8);

    let o = run(&["defect-curve", &exp2(), "--t-max", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("defect identically zero"));
}

#[test]
fn defect_curve_to_file_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = run(&["defect-curve", &half(), "--t-max", "2", "--steps", "11", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&std::fs::read_to_string(&out).unwrap()).len(), 11);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("curve.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "defect-curve");
    assert_eq!(m["spec_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["parameters"]["steps"], 11);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = run(&[
            "simulate", &half(), "--x0", "1", "--t-end", "1", "--paths", "4", "--seed", "7", "--eps", "1e-3",
            "--threads", threads, "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((0..4).map(|i| std::fs::read(out.join(format!("path_{i:06}.csv"))).unwrap()).collect::<Vec<_>>());
        let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["seed"], 7);
        assert_eq!(m["seed_source"], "flag");
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0][0], files[0][1]);
}

#[test]
fn simulate_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let o = run(&["simulate", &half(), "--t-end", "0", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("path_000000.csv")).unwrap();
    assert!(text.ends_with("time,size\n"));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed_source"], "entropy");
    assert!(m["seed"].is_u64());

    // The untilted measure keeps its small-jump mean below 1 only for eps < π.
    let out = dir.path().join("explosive");
    let o = run(&["simulate", &half(), "--explosive", "--eps", "3.2", "--t-end", "1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid engine configuration"), "{}", stderr(&o));

    let o = run(&[
        "simulate", &half(), "--explosive", "--eps", "1e-3", "--t-end", "3", "--seed", "1", "--paths", "8",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let exploded = (0..8)
        .filter(|i| {
            let text = std::fs::read_to_string(out.join(format!("path_{i:06}.csv"))).unwrap();
            text.contains("# exploded=true") && text.contains("# explosion_time=")
        })
        .count();
    assert!(exploded > 0);
}

#[test]
fn verify_trivial_rows_and_exclusions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["verify", "mean", &half(), "--t", "0", "--paths", "50", "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("mean.json")).unwrap()).unwrap();
    let row = &v["rows"][0];
    assert_eq!(row["mean"], 1.0);
    assert_eq!(row["theory"], 1.0);
    assert_eq!(row["stderr"], 0.0);
    assert_eq!(row["pass"], true);
    assert_eq!(v["experiment"], "mean");
    assert_eq!(v["seed"], 1);
    assert_eq!(v["spec"]["kind"], "tilted_power");

    let o = run(&["verify", "mgf", &half(), "--u", "0.9", "--paths", "200", "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("mgf.json")).unwrap()).unwrap();
    assert_eq!(v["rows"][0]["warning"], "variance");
    assert_eq!(v["rows"][0]["pass"], Value::Null);
    let csv = std::fs::read_to_string(dir.path().join("mgf.csv")).unwrap();
    assert!(csv.lines().last().unwrap().ends_with(",excluded"));
    assert!(dir.path().join("mgf.manifest.json").exists());
}

#[test]
fn verify_survival_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify", "survival", &half(), "--x0", "1", "--t", "1.386294", "--paths", "100000", "--eps", "1e-4",
        "--seed", "42", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("survival.json")).unwrap()).unwrap();
    let row = &v["rows"][0];
    assert!((row["theory"].as_f64().unwrap() - 0.778801).abs() < 1e-6);
    assert!(row["z"].as_f64().unwrap().abs() <= 3.0);
}

#[test]
fn verify_failure_exits_three() {
    // A z threshold of zero cannot be met by a noisy estimate.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify", "mean", &half(), "--paths", "100", "--seed", "2", "--z", "1e-12", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn lemma_check_grid() {
    let o = run(&["lemma-check"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9 * 6);
    for r in &rows {
        assert!(r[2] <= 1e-8 && r[3] <= 1e-8, "{r:?}");
        if r[1] == 0.0 {
            assert_eq!(r[2], 0.0);
        }
    }
    let o = run(&["lemma-check", "--alphas", "1.25", "--us", "-3,0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&o)).len(), 2);
    assert_eq!(run(&["lemma-check", "--alphas", "2.5"]).status.code(), Some(1));
    assert_eq!(run(&["lemma-check", "--us", "1.5"]).status.code(), Some(1));
}
