use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

use longmem::inference::{total_memory_test, Alternative};
use longmem::simulate::{fracdiff_noise, multivariate_fd, trial_seed, FracDiffSpec, MultiFdSpec};
use longmem::{estimate, periodogram, GseConfig, MemoryVector};
use longmem_cli::commands::{fit_input, Bandwidth};
use longmem_cli::experiments::{calibrate, CalibrateSpec};
use serde_json::Value;

fn longmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longmem")).args(args).output().expect("binary runs")
}

fn longmem_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longmem"))
        .args(args)
        .env("LONGMEM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_longmem"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn err_json(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stderr).unwrap()
}

fn simulate_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_string();
    let mut full = vec!["simulate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", &path]);
    let out = longmem(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn csv_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_is_byte_deterministic() {
    let args = ["simulate", "fd", "--d", "0.25", "--length", "16384", "--seed", "7"];
    let a = longmem(&args);
    let b = longmem(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"x1\n"));
    let other = longmem(&["simulate", "fd", "--d", "0.25", "--length", "16384", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn out_of_range_memory_is_a_validation_error() {
    let e = err_json(&longmem(&["simulate", "fd", "--d", "0.6", "--length", "100"]), 2);
    assert_eq!(e["kind"], "validation");
    assert!(e["message"].as_str().unwrap().contains("(-1/2, 1/2)"));
    let e = err_json(&longmem(&["simulate", "fd", "--d", "-0.5", "--length", "100"]), 2);
    assert!(e["message"].as_str().unwrap().contains("(-1/2, 1/2)"));
}

#[test]
fn usage_errors_are_json_and_help_succeeds() {
    let e = err_json(&longmem(&["estimate", "--bandwidth", "wide"]), 2);
    assert_eq!(e["code"], "usage");
    assert!(longmem(&["--help"]).status.success());
    let e = err_json(&longmem(&["estimate", "/no/such/file.csv"]), 2);
    assert_eq!(e["code"], "io");
}

#[test]
fn multivariate_preset_shape() {
    let out = longmem(&["simulate", "mfd", "--preset", "constant", "--p", "50", "--length", "16384", "--seed", "1"]);
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 16385);
    assert_eq!(rows[0].len(), 50);
    assert_eq!(rows[0][49], "x50");
    assert!(rows.iter().all(|r| r.len() == 50));
}

#[test]
fn file_round_trip_matches_in_process_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "fd.csv", &["fd", "--d", "0.4", "--length", "16384", "--seed", "3"]);
    let report = ok_json(&longmem(&["estimate", &path]));

    let x = fracdiff_noise(&FracDiffSpec::new(0.4, 16384, 3)).unwrap();
    let fit = estimate(&periodogram(&x).unwrap(), &GseConfig::sqrt_rule(16384)).unwrap();
    assert_eq!(report["d_hat"][0].as_f64().unwrap(), fit.d_hat[0]);
    assert_eq!(report["objective"].as_f64().unwrap(), fit.objective);
    assert_eq!(report["bandwidth"], 128);
    assert_eq!(report["schema"], 1);
    assert!((fit.d_hat[0] - 0.4).abs() <= 0.133);
    for key in ["normalized_total_memory", "iterations", "converged", "grad_norm"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn estimate_reads_stdin_and_reports_gph() {
    let sim = longmem(&["simulate", "mfd", "--d", "0.3,-0.1", "--length", "4096", "--seed", "11"]);
    let report = ok_json(&with_stdin(&["estimate", "-", "--gph", "--bandwidth", "32"], &sim.stdout));
    assert_eq!(report["bandwidth"], 32);
    assert_eq!(report["gph"].as_array().unwrap().len(), 2);
    assert_eq!(report["dim"], 2);
}

#[test]
fn explicit_bandwidth_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "x.csv", &["fd", "--d", "0.1", "--length", "16384", "--seed", "2"]);
    let report = ok_json(&longmem(&["estimate", &path, "--bandwidth", "32"]));
    assert_eq!(report["bandwidth"], 32);
}

#[test]
fn numeric_degeneracy_exits_three() {
    let zeros = "0,0\n".repeat(64);
    let e = err_json(&with_stdin(&["estimate"], zeros.as_bytes()), 3);
    assert_eq!(e["kind"], "numeric");
    assert!(e["message"].as_str().unwrap().contains("degenerate local covariance"));

    let sim = longmem(&["simulate", "mfd", "--preset", "zero", "--p", "5", "--length", "256"]);
    let e = err_json(&with_stdin(&["estimate", "--bandwidth", "3"], &sim.stdout), 3);
    assert_eq!(e["code"], "bandwidth_below_dimension");
    assert!(e["message"].as_str().unwrap().contains("bandwidth below dimension"));
}

#[test]
fn test_subcommand_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "c.csv", &["mfd", "--preset", "constant", "--p", "20", "--length", "16384", "--seed", "4"]);
    let r = ok_json(&longmem(&["test", &path, "--wald"]));
    assert_eq!(r["reject"], true);
    assert!(r["p_value"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["wald"]["df"], 20);
    assert_eq!(r["wald"]["reject"], true);

    let r = ok_json(&longmem(&["test", &path, "--alpha", "1.0", "--alternative", "less"]));
    assert_eq!(r["reject"], true);
    let e = err_json(&longmem(&["test", &path, "--alpha", "0"]), 2);
    assert!(e["message"].as_str().unwrap().contains("alpha"));
}

#[test]
fn white_noise_rarely_rejects() {
    // Same path as the `test` subcommand, in process to keep 100 fits cheap.
    let zeros = MemoryVector::zeros(5);
    let accepted = (0..100)
        .filter(|&s| {
            let x = multivariate_fd(&MultiFdSpec::new(zeros.clone(), 1 << 14, trial_seed(4242, s))).unwrap();
            let (_, fit) = fit_input(&x, Bandwidth::Sqrt).unwrap();
            let r = total_memory_test(&fit, 0.0, Alternative::Greater, 0.05).unwrap();
            !r.reject && r.p_value > 0.05
        })
        .count();
    assert!(accepted >= 90, "accepted {accepted} of 100");
}

#[test]
fn grid_agrees_with_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "g.csv", &["fd", "--d", "0.2", "--length", "16384", "--seed", "5"]);
    let out = longmem(&["grid", &path, "--from", "-0.45", "--to", "0.45", "--step", "0.01"]);
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows[0], vec!["d", "R"]);
    assert_eq!(rows.len(), 92);
    let (d_min, _) = rows[1..]
        .iter()
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .fold((f64::NAN, f64::INFINITY), |acc, (d, v)| if v < acc.1 { (d, v) } else { acc });
    let fit = ok_json(&longmem(&["estimate", &path]));
    assert!((d_min - fit["d_hat"][0].as_f64().unwrap()).abs() <= 0.02);
}

#[test]
fn two_dimensional_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "g2.csv", &["mfd", "--d", "0.2,0.1,0.0", "--length", "4096", "--seed", "6"]);
    let out = longmem(&["grid", &path, "--coords", "1,3", "--step", "0.05"]);
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows[0], vec!["d1", "d2", "R"]);
    assert_eq!(rows.len(), 1 + 19 * 19);
    assert!(rows[1..].iter().all(|r| r.len() == 3 && (r[2].is_empty() || r[2].parse::<f64>().unwrap().is_finite())));
}

#[test]
fn acov_partial_sums_are_nondecreasing() {
    let sim = longmem(&["simulate", "mfd", "--preset", "zero", "--p", "3", "--length", "2048", "--seed", "9"]);
    let out = with_stdin(&["acov", "--max-lag", "50"], &sim.stdout);
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 52);
    let sums: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(sums.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn periodogram_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), "p.csv", &["fd", "--d", "0.3", "--length", "1024", "--seed", "1"]);
    let rows = csv_rows(&longmem(&["periodogram", &path, "--bandwidth", "sqrt"]).stdout);
    assert_eq!(rows.len(), 33);
    let rows = csv_rows(&longmem(&["periodogram", &path, "--smooth", "3"]).stdout);
    assert_eq!(rows.len(), 1 + 511);
    let e = err_json(&longmem(&["periodogram", &path, "--coord", "2"]), 2);
    assert!(e["message"].as_str().unwrap().contains("coordinate"));
}

#[test]
fn single_window_bias_study_equals_estimate() {
    let out = longmem(&["bias-study", "--model", "fd", "--d", "0.25", "--windows", "16384", "--seed", "21"]);
    assert!(out.status.success());
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 2);
    let sim = longmem(&["simulate", "fd", "--d", "0.25", "--length", "16384", "--seed", "21"]);
    let fit = ok_json(&with_stdin(&["estimate"], &sim.stdout));
    assert_eq!(rows[1][0], "16384");
    assert_eq!(rows[1][1], "128");
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), fit["d_hat"][0].as_f64().unwrap());
    let e = err_json(&longmem(&["bias-study", "--model", "fd", "--windows", "100", "--length", "50"]), 2);
    assert!(e["message"].as_str().unwrap().contains("exceeds"));
}

#[test]
fn fd_bias_study_stays_close_for_long_windows() {
    let out = longmem(&[
        "bias-study", "--model", "fd", "--d", "0.25", "--windows", "4096,16384,65536", "--trials", "5", "--seed", "3",
    ]);
    let rows = csv_rows(&out.stdout);
    for r in &rows[1..] {
        assert!((r[3].parse::<f64>().unwrap() - 0.25).abs() <= 0.1, "{r:?}");
    }
}

#[test]
fn experiments_are_reproducible_across_thread_counts() {
    let cal = ["calibrate", "--p", "4", "--length", "2048", "--m", "2,16,45", "--trials", "12", "--seed", "5"];
    let a = longmem_env(&cal, "0");
    let b = longmem_env(&cal, "4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&a.stdout);
    assert_eq!(rows[0], vec!["m", "wald_type1", "tm_type1", "fitted", "degenerate"]);
    assert_eq!(rows[1], vec!["2", "", "", "0", "true"]);

    let val = ["validate-tm", "--setting", "range", "--p", "6", "--length", "2048", "--trials", "8", "--seed", "2"];
    assert_eq!(longmem_env(&val, "0").stdout, longmem_env(&val, "3").stdout);
    let e = err_json(&longmem_env(&val, "many"), 2);
    assert!(e["message"].as_str().unwrap().contains("LONGMEM_THREADS"));
}

#[test]
fn calibrate_with_one_trial_is_well_formed() {
    let r = ok_json(&longmem(&[
        "calibrate", "--p", "2", "--length", "1024", "--m", "16,32", "--trials", "1", "--format", "json",
    ]));
    for row in r["rows"].as_array().unwrap() {
        for key in ["wald_type1", "tm_type1"] {
            let v = row[key].as_f64().unwrap();
            assert!(v == 0.0 || v == 1.0);
        }
    }
    let e = err_json(&longmem(&["calibrate", "--p", "2", "--length", "1024", "--m", "16", "--trials", "0"]), 2);
    assert!(e["message"].as_str().unwrap().contains("trial"));
}

#[test]
fn low_dimensional_calibration() {
    let rows = calibrate(&CalibrateSpec {
        dim: 1,
        length: 1 << 14,
        bandwidths: vec![128],
        trials: 200,
        alpha: 0.05,
        alternative: Alternative::Greater,
        seed: 31,
    })
    .unwrap();
    let (w, t) = (rows[0].wald_type1.unwrap(), rows[0].tm_type1.unwrap());
    assert!((0.01..=0.10).contains(&w), "wald {w}");
    assert!((0.01..=0.10).contains(&t), "tm {t}");
}

#[test]
fn validate_tm_reports() {
    let r = ok_json(&longmem(&["validate-tm", "--setting", "zero", "--p", "10", "--length", "4096", "--trials", "10"]));
    assert!(r["mean"].as_f64().unwrap().abs() <= 0.02);
    assert_eq!(r["true_normalized"], 0.0);
    assert_eq!(r["reference_variance"].as_f64().unwrap(), 1.0 / (4.0 * 64.0 * 10.0));
    let e = err_json(&longmem(&["validate-tm", "--setting", "ramp", "--p", "10", "--length", "4096"]), 2);
    let msg = e["message"].as_str().unwrap();
    for name in ["zero", "constant", "subset", "range"] {
        assert!(msg.contains(name));
    }
}

#[test]
fn negative_control_generators_run() {
    for args in [
        vec!["markov", "--transition", "0.95,0.1;0.05,0.9", "--values", "-1,1", "--length", "500", "--seed", "3"],
        vec!["mtd", "--weights", "0.6,0.4", "--matrix", "0.9,0.2;0.1,0.8", "--matrix", "0.7,0.3;0.3,0.7", "--length", "500"],
        vec!["arma", "--ar", "0.5", "--ma", "0.3", "--length", "500"],
        vec!["nlar", "--map", "expar", "--a", "0.9", "--b", "0.3", "--length", "500"],
    ] {
        let mut full = vec!["simulate"];
        full.extend(args);
        let out = longmem(&full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(csv_rows(&out.stdout).len(), 501);
    }
    let e = err_json(&longmem(&["simulate", "markov", "--transition", "0.9,0.2;0.2,0.9", "--length", "10"]), 2);
    assert_eq!(e["code"], "not_stochastic");
}

#[test]
fn closed_downstream_pipe_exits_quietly() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_longmem"))
        .args(["simulate", "fd", "--d", "0.2", "--length", "200000"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
}
