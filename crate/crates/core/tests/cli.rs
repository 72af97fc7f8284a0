use std::process::{Command, Output};

use pointnls::record::parse_result_record;

fn pointnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointnls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const GS: &[&str] = &["solve-gs", "--p", "2.5", "--alpha", "0.5", "--mu", "1", "--grid-n", "600"];

#[test]
fn solve_gs_writes_a_valid_record() {
    let out = pointnls(GS);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["config", "grid", "state", "report", "residuals", "theorem_checks", "timings"] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
    let rec = parse_result_record(&text).unwrap();
    assert!(rec.report.converged && rec.report.postconditions_ok);
    assert_eq!(rec.config.command, "solve-gs");
    assert!(rec.timings.wall_seconds.is_none());
    let (state, _) = rec.state.to_state().unwrap();
    assert!(state.q() > 0.0);
}

#[test]
fn equal_inputs_give_identical_bytes() {
    let a = pointnls(GS);
    let b = pointnls(GS);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gs.csv");
    let mut args = GS.to_vec();
    args.extend(["--format", "csv", "--out", path.to_str().unwrap()]);
    let out = pointnls(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "p");
    assert!(headers.iter().any(|h| h == "omega_recovered"));
    assert_eq!(reader.records().count(), 1);
}

#[test]
fn validation_errors_exit_with_2() {
    let out = pointnls(&["solve-gs", "--p", "3.5", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p must lie in (2,3)"));

    let out = pointnls(&["solve-action", "--p", "2.5", "--alpha", "-1", "--omega", "100"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pointnls(&["solve-gs", "--p", "2.5", "--mu", "1", "--grid-n", "8"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pointnls(&["solve-gs", "--p", "2.5", "--mu", "1", "--tol-grad", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pointnls(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_with_3() {
    let out = pointnls(&[
        "solve-gs", "--p", "2.5", "--alpha", "0.5", "--mu", "1", "--grid-n", "600", "--max-iter", "2",
        "--multistart", "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn sweep_emits_one_row_per_tuple() {
    let out = pointnls(&[
        "sweep", "--p", "2.5", "--alpha=-0.1,0.1", "--mu", "0.5,1", "--grid-n", "600", "--format", "csv",
        "--multistart", "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    // input order is preserved: p, then alpha, then mu
    let alphas: Vec<f64> = rows.iter().map(|r| r[col("alpha")].parse().unwrap()).collect();
    let mus: Vec<f64> = rows.iter().map(|r| r[col("mu")].parse().unwrap()).collect();
    assert_eq!(alphas, [-0.1, -0.1, 0.1, 0.1]);
    assert_eq!(mus, [0.5, 1.0, 0.5, 1.0]);
    for r in &rows {
        assert_eq!(&r[col("converged")], "true");
        assert_eq!(&r[col("below_reference")], "true");
    }
}

#[test]
fn action_soliton_and_dmin_commands() {
    let out = pointnls(&["solve-action", "--p", "2.5", "--alpha", "1", "--omega", "2", "--grid-n", "600"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rec = parse_result_record(&stdout(&out)).unwrap();
    assert!((rec.report.functionals.omega - 2.0).abs() < 1e-15);
    assert!(rec.report.functionals.nehari.abs() < 1e-6 * rec.report.functionals.quadratic_omega);

    let out = pointnls(&["soliton", "--p", "2.5", "--mu", "1", "--grid-n", "600"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rec = parse_result_record(&stdout(&out)).unwrap();
    assert_eq!(rec.state.q, 0.0);
    assert!((rec.report.functionals.mass - 1.0).abs() < 1e-9);

    let out = pointnls(&["dmin", "--p", "2.5", "--alpha", "-1", "--omega", "80"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["value"].as_f64().unwrap() < 1e-4);
    assert_eq!(v["window"]["kind"], "two_components");
}

#[test]
fn verify_passes_every_check() {
    let out = pointnls(&["verify", "--p", "2.5", "--alpha", "1", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rec = parse_result_record(&stdout(&out)).unwrap();
    let checks = rec.theorem_checks.unwrap();
    assert!(checks.overall);
    assert!(checks.checks.len() >= 10);
}
