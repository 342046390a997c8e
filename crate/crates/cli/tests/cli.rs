//! End-to-end checks of the installed binary: argument handling, exit
//! codes, file round trips, and run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photocount"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    let help = run_in(dir.path(), &["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("simulate"));
    assert!(stdout(&help).contains("pipeline"));
    let version = run_in(dir.path(), &["--version"]);
    assert_eq!(code(&version), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let unknown = run_in(dir.path(), &["simulate", "--bogus"]);
    assert_eq!(code(&unknown), 1);
    let no_command = run_in(dir.path(), &[]);
    assert_eq!(code(&no_command), 1);
    let bad_value = run_in(
        dir.path(),
        &["fit", "--curve", "c.csv", "--model", "parabola"],
    );
    assert_eq!(code(&bad_value), 1);
}

#[test]
fn simulation_without_a_seed_is_refused() {
    let dir = TempDir::new().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "simulate",
            "--source-kind",
            "coherent",
            "--source-mu",
            "1.0",
            "--trials",
            "100",
        ],
    );
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("seed"));
}

#[test]
fn config_file_problems_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad_key = dir.path().join("bad.toml");
    fs::write(&bad_key, "seed = 1\ntrails = 100\n").unwrap();
    let output = run_in(dir.path(), &["simulate", "--config", "bad.toml"]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("bad.toml"));

    let unsorted = dir.path().join("unsorted.toml");
    fs::write(
        &unsorted,
        "seed = 1\nmu_grid = [0.5, 0.25]\n[source]\nkind = \"coherent\"\nmu = 1.0\n",
    )
    .unwrap();
    let output = run_in(dir.path(), &["sweep", "--config", "unsorted.toml"]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("strictly increasing"));

    let missing = run_in(dir.path(), &["simulate", "--config", "absent.toml"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn pipeline_flags_cannot_override_per_sweep_settings() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("pipe.toml");
    fs::write(
        &config,
        concat!(
            "seed = 1\n[reference]\nmu_grid = [0.5]\n",
            "[reference.source]\nkind = \"coherent\"\nmu = 1.0\n",
            "[subject]\nmu_grid = [0.5]\n",
            "[subject.source]\nkind = \"coherent\"\nmu = 1.0\n",
        ),
    )
    .unwrap();
    let output = run_in(
        dir.path(),
        &["pipeline", "--config", "pipe.toml", "--trials", "10"],
    );
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("per section"));
}

#[test]
fn empty_detector_output_is_a_numeric_error() {
    let dir = TempDir::new().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "simulate",
            "--dark-only",
            "--dark-mean",
            "0.0",
            "--dark-trials",
            "500",
            "--seed",
            "5",
            "--out",
            "dark.csv",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let estimate = run_in(
        dir.path(),
        &["estimate", "--histogram", "dark.csv", "--seed", "6"],
    );
    assert_eq!(code(&estimate), 2);
    assert!(stderr(&estimate).contains("order 2"));
}

#[test]
fn signed_histograms_cannot_be_bootstrapped_directly() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("diff.csv"), "k,count\n0,-5\n1,3\n2,2\n").unwrap();
    fs::write(
        dir.path().join("diff.meta.json"),
        "{\"schema\":\"photocount.histogram.v1\",\"trials\":1000,\"signed\":true,\
         \"clamped_crosstalk_trials\":0}",
    )
    .unwrap();
    let output = run_in(
        dir.path(),
        &["estimate", "--histogram", "diff.csv", "--seed", "1"],
    );
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("resample"));
}

#[test]
fn estimate_records_carry_exactly_the_documented_fields() {
    let dir = TempDir::new().unwrap();
    let sim = run_in(
        dir.path(),
        &[
            "simulate",
            "--source-kind",
            "coherent",
            "--source-mu",
            "2.0",
            "--trials",
            "20000",
            "--seed",
            "3",
            "--out",
            "h.csv",
        ],
    );
    assert_eq!(code(&sim), 0, "stderr: {}", stderr(&sim));
    let est = run_in(
        dir.path(),
        &["estimate", "--histogram", "h.csv", "--seed", "4"],
    );
    assert_eq!(code(&est), 0, "stderr: {}", stderr(&est));
    let record: serde_json::Value = serde_json::from_str(&stdout(&est)).unwrap();
    let object = record.as_object().unwrap();
    let mut keys: Vec<&str> = object.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["P_used", "corrected", "g", "l", "mode", "mu", "std_error"]
    );
    assert_eq!(object["l"], 2);
    assert_eq!(object["corrected"], false);
    assert!(object["P_used"].is_null());
    assert_eq!(object["mode"], "exact_m");

    let corrected = run_in(
        dir.path(),
        &[
            "estimate",
            "--histogram",
            "h.csv",
            "--seed",
            "4",
            "--correct-p",
            "0.177",
        ],
    );
    assert_eq!(code(&corrected), 0);
    let record: serde_json::Value = serde_json::from_str(&stdout(&corrected)).unwrap();
    assert_eq!(record["corrected"], true);
    assert!((record["P_used"].as_f64().unwrap() - 0.177).abs() < 1e-12);
}

#[test]
fn crosstalk_correction_rejects_other_orders_and_bad_strengths() {
    let dir = TempDir::new().unwrap();
    run_in(
        dir.path(),
        &[
            "simulate",
            "--source-kind",
            "thermal",
            "--source-mu",
            "1.0",
            "--trials",
            "20000",
            "--seed",
            "8",
            "--out",
            "h.csv",
        ],
    );
    let wrong_order = run_in(
        dir.path(),
        &[
            "estimate",
            "--histogram",
            "h.csv",
            "--seed",
            "1",
            "--order",
            "3",
            "--correct-p",
            "0.1",
        ],
    );
    assert_eq!(code(&wrong_order), 1);
    assert!(stderr(&wrong_order).contains("order 2"));
    let bad_p = run_in(
        dir.path(),
        &[
            "estimate",
            "--histogram",
            "h.csv",
            "--seed",
            "1",
            "--correct-p",
            "1.5",
        ],
    );
    assert_eq!(code(&bad_p), 1);
}

#[test]
fn discretize_rounds_to_the_nearest_level_with_ties_up() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("a.csv"),
        "amplitude\n0.0\n0.49\n0.5\n1.49\n2.5\n",
    )
    .unwrap();
    let output = run_in(
        dir.path(),
        &[
            "discretize",
            "--amplitudes",
            "a.csv",
            "--unit-amplitude",
            "1.0",
            "--out",
            "h.csv",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let csv = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(csv, "k,count\n0,2\n1,2\n3,1\n");
    let meta = fs::read_to_string(dir.path().join("h.meta.json")).unwrap();
    assert!(meta.contains("\"unit_amplitude\": 1.0"));

    let estimate = run_in(
        dir.path(),
        &["estimate", "--histogram", "h.csv", "--seed", "2"],
    );
    assert_eq!(code(&estimate), 0, "stderr: {}", stderr(&estimate));
}

#[test]
fn negative_amplitudes_name_the_offending_record() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.csv"), "amplitude\n1.0\n-0.3\n2.0\n").unwrap();
    let output = run_in(
        dir.path(),
        &[
            "discretize",
            "--amplitudes",
            "a.csv",
            "--unit-amplitude",
            "0.5",
        ],
    );
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("record 2"));
}

#[test]
fn fit_consumes_sweep_output() {
    let dir = TempDir::new().unwrap();
    let sweep = run_in(
        dir.path(),
        &[
            "sweep",
            "--source-kind",
            "coherent",
            "--source-mu",
            "1.0",
            "--mu-grid",
            "0.5,1.0,2.0",
            "--trials",
            "30000",
            "--bootstrap-resamples",
            "100",
            "--seed",
            "17",
            "--out",
            "curve.csv",
        ],
    );
    assert_eq!(code(&sweep), 0, "stderr: {}", stderr(&sweep));
    let fit = run_in(
        dir.path(),
        &[
            "fit",
            "--curve",
            "curve.csv",
            "--model",
            "crosstalk_ref",
            "--which",
            "raw",
        ],
    );
    assert_eq!(code(&fit), 0, "stderr: {}", stderr(&fit));
    let result: serde_json::Value = serde_json::from_str(&stdout(&fit)).unwrap();
    assert_eq!(result["model"], "crosstalk_ref");
    assert_eq!(result["converged"], true);
    let p = result["params"][0].as_f64().unwrap();
    assert!(p > 0.05 && p < 0.35, "fitted strength {p}");

    let none_match = run_in(
        dir.path(),
        &[
            "fit",
            "--curve",
            "curve.csv",
            "--model",
            "hyperbola",
            "--which",
            "corrected",
        ],
    );
    assert_eq!(code(&none_match), 1);

    let underdetermined = dir.path().join("tiny.csv");
    fs::write(&underdetermined, "mu,g,sigma,corrected\n1.0,1.5,0.1,0\n").unwrap();
    let degenerate = run_in(
        dir.path(),
        &["fit", "--curve", "tiny.csv", "--model", "hyperbola"],
    );
    assert_eq!(code(&degenerate), 2);
}

#[test]
fn identical_seeds_reproduce_every_output_byte() {
    let once = TempDir::new().unwrap();
    let again = TempDir::new().unwrap();
    let args = [
        "sweep",
        "--source-kind",
        "degenerate_squeezed_supermode",
        "--source-mu",
        "0.8",
        "--mu-grid",
        "0.5,1.0",
        "--trials",
        "20000",
        "--bootstrap-resamples",
        "100",
        "--seed",
        "99",
        "--out",
        "curve.csv",
        "--report",
        "report.json",
    ];
    let first = run_in(once.path(), &args);
    let second = run_in(again.path(), &args);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert_eq!(code(&second), 0);
    assert_eq!(first.stdout, second.stdout);
    for name in ["curve.csv", "report.json"] {
        let a = fs::read(once.path().join(name)).unwrap();
        let b = fs::read(again.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn dark_subtraction_flows_through_the_estimate_command() {
    let dir = TempDir::new().unwrap();
    let lit = run_in(
        dir.path(),
        &[
            "simulate",
            "--source-kind",
            "coherent",
            "--source-mu",
            "1.0",
            "--trials",
            "40000",
            "--seed",
            "41",
            "--out",
            "lit.csv",
        ],
    );
    assert_eq!(code(&lit), 0, "stderr: {}", stderr(&lit));
    let dark = run_in(
        dir.path(),
        &[
            "simulate",
            "--dark-only",
            "--dark-trials",
            "160000",
            "--seed",
            "42",
            "--out",
            "dark.csv",
        ],
    );
    assert_eq!(code(&dark), 0, "stderr: {}", stderr(&dark));
    let est = run_in(
        dir.path(),
        &[
            "estimate",
            "--histogram",
            "lit.csv",
            "--dark",
            "dark.csv",
            "--seed",
            "43",
            "--out",
            "est.json",
        ],
    );
    assert_eq!(code(&est), 0, "stderr: {}", stderr(&est));
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("est.json")).unwrap()).unwrap();
    let g = record["g"].as_f64().unwrap();
    let sigma = record["std_error"].as_f64().unwrap();
    let mu = record["mu"].as_f64().unwrap();
    let p = 0.177;
    let expected = (1.0 + 2.0 * p) / ((1.0 + p) * (1.0 + p)) + 2.0 * p / ((1.0 + p) * mu);
    assert!(
        (g - expected).abs() < 4.0 * sigma + 0.02 * expected,
        "dark-subtracted coherent g2 {g} +- {sigma} far from the crosstalk prediction {expected}"
    );
}
