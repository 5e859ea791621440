//! End-to-end tests of the `tbsim` binary.

use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use twinbeam::cli::output::sha256_hex;
use twinbeam::dump;

fn tbsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbsim")).args(args).output().expect("binary runs")
}

fn tbsim_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbsim"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn small_config(n_photons: f64) -> Value {
    json!({
        "schema_version": 1,
        "pump": {"n_photons": n_photons},
        "waveguide": {"ell_min": -5, "ell_max": 5, "gamma_delta": 0.1, "kappa": "optimal"},
        "grid": {"n_points": 24},
        "outputs": {"artifacts": ["report", "jsa", "moment", "modes", "propagator"], "n_modes": 3}
    })
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)))
}

fn simulate(dir: &Path, config: &Path, out: &str) -> (Output, PathBuf) {
    let out_dir = dir.join(out);
    let o = tbsim(&["simulate", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    (o, out_dir)
}

#[test]
fn malformed_json_exits_2_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.json", "{\n  \"schema_version\": 1,\n  \"pump\": {\"n_photons\": 4,}\n}\n");
    let (out, _) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "json");
    assert_eq!(err["error"]["line"], 3);
    assert!(err["error"]["column"].as_u64().unwrap() > 0);
}

#[test]
fn schema_violation_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let mut c = small_config(1.0);
    c["grid"]["n_points"] = json!(1);
    let cfg = write(tmp.path(), "c.json", &c.to_string());
    let (out, _) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["field"], "grid.n_points");

    let missing = json!({"schema_version": 1, "pump": {"n_photons": 1}});
    let cfg = write(tmp.path(), "m.json", &missing.to_string());
    let (out, _) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"].as_str().unwrap().contains("waveguide"));
}

#[test]
fn uniform_solver_with_spm_is_refused() {
    let tmp = TempDir::new().unwrap();
    let mut c = small_config(1.0);
    c["pump"]["zeta_p"] = json!([{"start": -5, "end": 5, "value": 0.1}]);
    let cfg = write(tmp.path(), "c.json", &c.to_string());
    let (out, _) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "solver_applicability");

    c["solver"] = json!({"kind": "trotter", "n_steps": 8});
    let cfg = write(tmp.path(), "c.json", &c.to_string());
    let (out, dir) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.join("report.json"));
    assert_eq!(report["solver"]["kind"], "trotter");
    assert_eq!(report["solver"]["n_steps"], 8);
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &serde_json::to_string_pretty(&small_config(20.0)).unwrap());
    let (a, dir_a) = simulate(tmp.path(), &cfg, "a");
    let (b, dir_b) = simulate(tmp.path(), &cfg, "b");
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));

    let report = read_json(&dir_a.join("report.json"));
    let hash = report["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for name in ["report.json", "jsa.csv", "moment.csv", "modes.csv", "jsa.tbsm", "moment.tbsm", "propagator.tbsm"] {
        let x = fs::read(dir_a.join(name)).unwrap();
        let y = fs::read(dir_b.join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    for name in ["jsa.csv", "moment.csv", "modes.csv"] {
        let text = fs::read_to_string(dir_a.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config_sha256={hash}"), "{name}");
    }
    let artifacts = report["artifacts"].as_object().unwrap();
    assert_eq!(artifacts.len(), 6);
    for (name, digest) in artifacts {
        assert_eq!(sha256_hex(&fs::read(dir_a.join(name)).unwrap()), digest.as_str().unwrap(), "{name}");
    }
    // timing is kept apart from the reproducible report
    assert!(report.get("timing").is_none());
    assert!(read_json(&dir_a.join("timing.json"))["total_s"].as_f64().unwrap() >= 0.0);

    let u = dump::read_file(&dir_a.join("propagator.tbsm")).unwrap();
    assert_eq!(u.shape(), (48, 48));
    let jsa = dump::read_file(&dir_a.join("jsa.tbsm")).unwrap();
    assert_eq!(jsa.shape(), (24, 24));

    // residuals and results are present
    assert!(report["residuals"]["su11"]["group"].as_f64().unwrap() <= 1e-10);
    assert!(report["residuals"]["decomposition"]["orthonormality"].as_f64().unwrap() <= 1e-10);
    assert!(report["results"]["mean_n_signal"].as_f64().unwrap() > 0.0);
}

#[test]
fn rerun_from_echoed_config_reproduces_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(9.0).to_string());
    let (first, dir) = simulate(tmp.path(), &cfg, "first");
    assert_eq!(first.status.code(), Some(0));
    let report = fs::read(dir.join("report.json")).unwrap();
    let echoed: Value = serde_json::from_slice::<Value>(&report).unwrap()["config"].clone();
    let cfg2 = write(tmp.path(), "echo.json", &serde_json::to_string_pretty(&echoed).unwrap());
    let (second, dir2) = simulate(tmp.path(), &cfg2, "second");
    assert_eq!(second.status.code(), Some(0));
    assert!(fs::read(dir2.join("report.json")).unwrap() == report);
}

#[test]
fn zero_pump_gives_vacuum_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(0.0).to_string());
    let (out, dir) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.join("report.json"));
    let r = report["results"]["r"].as_array().unwrap();
    assert!(!r.is_empty());
    assert!(r.iter().all(|x| x.as_f64() == Some(0.0)));
    assert_eq!(report["results"]["mean_n_signal"], 0.0);
    assert_eq!(report["results"]["vacuum"], true);
    assert_eq!(report["results"]["schmidt_number"], 1.0);
}

#[test]
fn si_units_are_converted_and_recorded() {
    let tmp = TempDir::new().unwrap();
    let c = json!({
        "schema_version": 1,
        "scales": {
            "sigma": {"value": 2.0, "unit": "rad/ps"},
            "v_p": {"value": 1.3e8, "unit": "m/s"},
            "photon_energy": {"value": 2.56e-19, "unit": "J"}
        },
        "pump": {"n_photons": 4.0},
        "waveguide": {
            "ell_min": {"value": -0.325, "unit": "mm"},
            "ell_max": {"value": 0.325, "unit": "mm"},
            "gamma_delta": 0.1,
            "kappa": "optimal"
        },
        "grid": {"n_points": 16}
    });
    let cfg = write(tmp.path(), "c.json", &c.to_string());
    let (out, dir) = simulate(tmp.path(), &cfg, "o");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let units = &read_json(&dir.join("report.json"))["units"];
    let conv = units["conversions"].as_array().unwrap();
    assert_eq!(conv.len(), 2);
    assert_eq!(conv[1]["field"], "waveguide.ell_max");
    // 0.325 mm over a length unit of 65 um
    assert!((conv[1]["internal"].as_f64().unwrap() - 5.0).abs() < 1e-12);
    assert!((units["unit_sizes"]["length_m"].as_f64().unwrap() - 6.5e-5).abs() < 1e-18);

    // the same config without scales cannot interpret millimetres
    let mut bare = c.clone();
    bare.as_object_mut().unwrap().remove("scales");
    let cfg = write(tmp.path(), "bare.json", &bare.to_string());
    let (out, _) = simulate(tmp.path(), &cfg, "o2");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["field"], "waveguide.ell_min");
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn single_point_sweep_matches_simulate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(16.0).to_string());
    let (sim, dir) = simulate(tmp.path(), &cfg, "sim");
    assert_eq!(sim.status.code(), Some(0));
    let report = read_json(&dir.join("report.json"));
    let sweep_dir = tmp.path().join("sweep");
    let out = tbsim(&[
        "sweep", cfg.to_str().unwrap(), "--param", "sqrt_np", "--from", "4", "--to", "4", "--points", "1",
        "--out", sweep_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(text, String::from_utf8(out.stdout).unwrap());
    let row = &csv_rows(&text)[0];
    let r = report["results"]["r"].as_array().unwrap();
    assert_eq!(row[0], 4.0);
    assert_eq!(row[1], 16.0);
    for l in 0..3 {
        assert_eq!(row[2 + l], r[l].as_f64().unwrap());
    }
    assert_eq!(row[6], report["results"]["mean_n_signal"].as_f64().unwrap());
    assert_eq!(row[8], report["results"]["schmidt_number"].as_f64().unwrap());
}

#[test]
fn sweep_is_ordered_and_thread_count_independent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(1.0).to_string());
    let args = |dir: &str| {
        vec![
            "sweep".to_string(), cfg.to_str().unwrap().to_string(), "--from".into(), "0.1".into(), "--to".into(),
            "10".into(), "--points".into(), "5".into(), "--scale".into(), "log".into(), "--out".into(),
            tmp.path().join(dir).to_str().unwrap().to_string(),
        ]
    };
    let a: Vec<String> = args("one");
    let b: Vec<String> = args("four");
    let one = tbsim_env(&a.iter().map(String::as_str).collect::<Vec<_>>(), "TBSIM_THREADS", "1");
    let four = tbsim_env(&b.iter().map(String::as_str).collect::<Vec<_>>(), "TBSIM_THREADS", "4");
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let rows = csv_rows(&String::from_utf8(one.stdout).unwrap());
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0] && w[0][2] < w[1][2]));

    let bad = tbsim_env(&a.iter().map(String::as_str).collect::<Vec<_>>(), "TBSIM_THREADS", "zero");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_bisection_writes_result() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(1.0).to_string());
    let dir = tmp.path().join("b");
    let out = tbsim(&[
        "sweep", cfg.to_str().unwrap(), "--from", "0", "--to", "8", "--bisect-mean-photons", "3", "--tolerance",
        "1e-4", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("bisection.json"));
    assert!((doc["search"]["mean_n_signal"].as_f64().unwrap() - 3.0).abs() <= 1e-4);
    assert_eq!(doc["search"]["converged"], true);
}

fn estimate_params(area: f64, chi2: f64) -> Value {
    let c0 = 299792458.0;
    let beam = |lambda: f64, n: f64, ng: f64| {
        json!({"omega": 2.0 * std::f64::consts::PI * c0 / lambda, "n": n, "v_group": c0 / ng, "v_phase": c0 / n})
    };
    json!({
        "area": area,
        "n_nonlinear": 2.2,
        "pump": beam(775e-9, 2.18, 2.30),
        "signal": beam(1550e-9, 2.14, 2.25),
        "idler": beam(1500e-9, 2.14, 2.24),
        "chi2": chi2,
        "chi3": 2e-22
    })
}

fn estimate(tmp: &Path, params: &Value) -> Value {
    let p = write(tmp, "params.json", &params.to_string());
    let out = tbsim(&["estimate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice::<Value>(&out.stdout).unwrap()["estimate"].clone()
}

#[test]
fn estimate_command() {
    let tmp = TempDir::new().unwrap();
    let base = estimate(tmp.path(), &estimate_params(1e-12, 2e-11));
    // values frozen from an independent evaluation of the flat-mode formulas
    let close = |v: &Value, x: f64| (v.as_f64().unwrap() - x).abs() <= 1e-10 * x;
    assert!(close(&base["gamma_1"], 314.6941333419984));
    assert!(close(&base["gamma_2"], 491.8877462920552));
    assert!(close(&base["gamma_xpm_s"], 0.08476749442423923));

    let doubled = estimate(tmp.path(), &estimate_params(1e-12, 4e-11));
    assert!(close(&doubled["gamma_1"], 2.0 * 314.6941333419984));

    let huge = estimate(tmp.path(), &estimate_params(1e6, 2e-11));
    assert!(huge["gamma_1"].as_f64().unwrap() < 1e-6 * 314.0);

    let p = write(tmp.path(), "neg.json", &estimate_params(-1.0, 2e-11).to_string());
    let out = tbsim(&["estimate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["field"], "area");
}

#[test]
fn validate_fast_suite_and_fault_injection() {
    let ok = tbsim(&["validate", "--suite", "fast"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["passed"], true);

    let bad = tbsim(&["validate", "--suite", "fast", "--inject-fault", "delta-omega"]);
    assert_eq!(bad.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&bad.stdout).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"decomposition_orthonormality"), "{failed:?}");
}

#[test]
fn validate_user_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(30.0).to_string());
    let out = tbsim(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn validate_full_suite_within_budget() {
    let start = std::time::Instant::now();
    let out = tbsim(&["validate"]);
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "full");
    assert!(elapsed <= 300.0, "{elapsed} s");
}

fn docs_examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

#[test]
fn shipped_examples_parse_and_resolve() {
    let mut seen = 0;
    for entry in fs::read_dir(docs_examples()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path).unwrap();
            let (_, cfg) = twinbeam::cli::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn high_gain_example_reaches_41_photons() {
    let tmp = TempDir::new().unwrap();
    let (out, dir) = simulate(tmp.path(), &docs_examples().join("high_gain_41.json"), "hg");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.join("report.json"));
    let n = report["results"]["mean_n_signal"].as_f64().unwrap();
    assert!((n - 41.0).abs() <= 0.5, "{n}");
    assert_eq!(report["results"]["mean_n_idler"].as_f64().unwrap(), n);
}
